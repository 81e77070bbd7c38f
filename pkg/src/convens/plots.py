"""Report figures rendered next to the delimited output."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_nusselt_profiles(hot, cold, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(hot[0], hot[1], label="hot wall (x=0)")
    ax.plot(cold[0], cold[1], label="cold wall (x=1)", linestyle="--")
    ax.set_xlabel("y")
    ax.set_ylabel("local Nusselt number")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_step_log(log, path):
    steps = [r.step for r in log]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(steps, [r.dt for r in log])
    ax1.set_ylabel("dt")
    ax1.grid(alpha=0.3)
    for j in range(len(log[0].u_norms)):
        ax2.plot(steps, [r.u_norms[j] for r in log], label=f"|u| member {j}")
        ax2.plot(steps, [r.T_norms[j] for r in log], label=f"|T| member {j}",
                 linestyle="--")
    ax2.set_xlabel("step")
    ax2.set_ylabel("L2 norm")
    ax2.legend(fontsize=8)
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mms_convergence(result, path):
    dts = [lev.dt for lev in result.levels]
    keys = [("u_inf_l2", "velocity Linf(L2)"), ("u_2_h1", "velocity L2(H1)"),
            ("T_inf_l2", "temperature Linf(L2)"), ("T_2_h1", "temperature L2(H1)"),
            ("p_2_l2", "pressure L2(L2)")]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for key, label in keys:
        ax.loglog(dts, [lev.errors[key] for lev in result.levels],
                  marker="o", label=label)
    e0 = result.levels[0].errors["u_2_h1"]
    ax.loglog(dts, [e0 * (d / dts[0]) ** 2 for d in dts], "k:", label="slope 2")
    ax.set_xlabel("dt (= h / sqrt(2) scale)")
    ax.set_ylabel("error")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
