#!/usr/bin/env python3
"""Time the pruned stabilizer solver against the exhaustive triple scan.

The pruned solver enumerates canonical (a, b) pairs and solves for c
linearly; the brute-force oracle walks every canonical triple.
"""

import time

from gspimage import mumford as mf


def main() -> None:
    print("l    pruned      brute       size  agree")
    for ell in (2, 3, 5):
        t0 = time.monotonic()
        fast = mf.pointwise_stabilizer_in_image(ell)
        t1 = time.monotonic()
        brute = mf.stabilizer_brute_force(ell)
        t2 = time.monotonic()
        print(f"{ell:<4} {t1-t0:8.3f}s  {t2-t1:8.3f}s  {len(fast):>5}  {fast == brute}")
    for ell in (7, 11, 13):
        t0 = time.monotonic()
        fast = mf.pointwise_stabilizer_in_image(ell)
        print(f"{ell:<4} {time.monotonic()-t0:8.3f}s  {'-':>9}  {len(fast):>5}  -")


if __name__ == "__main__":
    main()
