"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/compare_backends.py [--runs 5] [--out compare.csv]

Both implementations see identical inputs (``photonsim.bench.make_input``);
the script also checks that their results agree.
"""

import argparse
import csv
import sys


from photonsim import bench, kernels

SIZES = {
    "permanent": [4, 8, 12, 16],
    "hafnian": [4, 8, 12, 16, 20],
    "loop_hafnian": [4, 8, 12, 16, 20],
    "torontonian": [4, 8, 12, 16],
    "loop_torontonian": [4, 8, 12, 16],
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=5)
    parser.add_argument("--out", default="-")
    args = parser.parse_args(argv)

    impls = kernels.available_impls()
    if "compiled" not in impls:
        print("compiled kernels are not built; only the Python fallback is available", file=sys.stderr)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["kernel", "size", *[f"{i}_seconds" for i in impls], "speedup", "max_rel_diff"])
    for kernel, sizes in SIZES.items():
        for n in sizes:
            inputs = bench.make_input(kernel, n)
            values = [bench._call(kernel, inputs, 1, impl) for impl in impls]
            diff = max(abs(v - values[0]) / max(abs(values[0]), 1e-300) for v in values)
            times = [bench.time_kernel(kernel, n, 1, args.runs, impl).seconds for impl in impls]
            speedup = times[-1] / times[0] if len(times) == 2 else float("nan")
            writer.writerow([kernel, n, *[f"{t:.6g}" for t in times], f"{speedup:.2f}", f"{diff:.1e}"])
            fh.flush()
    if fh is not sys.stdout:
        fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
