"""Direct-summation oracle for G(t) = sum 1/(n L(n)) over the window
t <= sqrt(n), t > e sqrt(n) / sqrt(L(n)), L(x) = max(1, ln ln x).

Summed with math.fsum, independent of the C++ loop.
"""
import argparse
import json
import math


def iterated_log(n):
    if n <= 1:
        return 1.0
    return max(1.0, math.log(math.log(n)))


def g_value(e, t):
    n = max(1, math.ceil(t * t))
    lo = n
    terms = []
    while t * t * iterated_log(n) > e * e * n:
        terms.append(1.0 / (n * iterated_log(n)))
        n += 1
    return {"t": t, "e": e, "lo": lo, "hi": n - 1, "value": math.fsum(terms)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--e", type=float, default=0.5)
    ap.add_argument("--t", type=float, nargs="+", default=[10.0])
    args = ap.parse_args()
    out = {"command": "python3 tools/oracles/g_value.py --e %g --t %s" % (args.e, " ".join("%g" % t for t in args.t)),
           "values": [g_value(args.e, t) for t in args.t]}
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
