"""Per-epoch training time on synthetic graphs: the cost grows roughly
linearly in the number of edges and mildly in the attribute width.

    python demos/scaling.py
"""
from graph_infill.bench import benchmark_scaling, format_table, scaling_exponent

edges = benchmark_scaling([(1000, 50_000, 32), (1000, 100_000, 32), (1000, 200_000, 32), (1000, 400_000, 32)])
print(format_table(edges))
print(f"exponent in |E|: {scaling_exponent(edges, 'num_edges'):.2f}\n")

dims = benchmark_scaling([(2000, 20_000, 128), (2000, 20_000, 256), (2000, 20_000, 512)])
print(format_table(dims))
print(f"exponent in d: {scaling_exponent(dims, 'feature_dim'):.2f}")
