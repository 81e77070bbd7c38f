"""Legacy-VTK ASCII unstructured-grid output (triangle cells, point data)."""

import numpy as np


def write_vtk(path, mesh, point_scalars=None, point_vectors=None, title="convens fields"):
    """Write the mesh and vertex-sampled fields.

    point_scalars: {name: (nv,) array}; point_vectors: {name: (nv, 2) array}.
    P2 fields should be restricted to their vertex dofs before export.
    """
    nv = mesh.num_vertices
    nt = mesh.num_triangles
    point_scalars = point_scalars or {}
    point_vectors = point_vectors or {}
    for name, arr in point_scalars.items():
        if len(arr) != nv:
            raise ValueError(f"scalar field {name!r} is not vertex-sized")
    for name, arr in point_vectors.items():
        if len(arr) != nv:
            raise ValueError(f"vector field {name!r} is not vertex-sized")

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.12g} {y:.12g} 0\n")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {nt}\n")
        fh.write("5\n" * nt)
        if point_scalars or point_vectors:
            fh.write(f"POINT_DATA {nv}\n")
            for name, arr in point_scalars.items():
                fh.write(f"SCALARS {name} double 1\n")
                fh.write("LOOKUP_TABLE default\n")
                for v in np.asarray(arr, dtype=float):
                    fh.write(f"{v:.12g}\n")
            for name, arr in point_vectors.items():
                fh.write(f"VECTORS {name} double\n")
                for vx, vy in np.asarray(arr, dtype=float):
                    fh.write(f"{vx:.12g} {vy:.12g} 0\n")


def vertex_part_scalar(field, mesh):
    """Vertex dofs of a scalar P2 field."""
    return field[:mesh.num_vertices]


def vertex_part_vector(field, mesh, num_scalar_dofs):
    """Vertex dofs of a vector P2 field as (nv, 2)."""
    nv = mesh.num_vertices
    return np.column_stack([field[:nv], field[num_scalar_dofs:num_scalar_dofs + nv]])
