"""Time each hot kernel under the numba and numpy backends.

    python benchmarks/bench_backends.py [--size 4000] [--repeat 3]

Numba timings exclude JIT compilation (one warm-up call per kernel). Every
kernel's output is checked for bit-identity across backends.
"""
import argparse
import time

import numpy as np

from lymphmargin import _backend
from lymphmargin.curve_match import cdtw_matrix
from lymphmargin.density_profile import profile_labels
from lymphmargin.distance_field import signed_edt
from lymphmargin.slide_model import AnnotationSet, SlideMeta, rasterize_annotations
from lymphmargin.stain import LymphocyteMask
from lymphmargin.synth_oracle import SineMargin, pixel_uniforms, synth_labels


def cases(size: int):
    meta = SlideMeta(2.0, size, size)
    labels = synth_labels(SineMargin(0.05 * size * 2.0, 0.4 * size * 2.0), meta)
    lab = labels.labels.copy()
    lab[: size // 10, : size // 10] = 3
    labels = type(labels)(meta, lab)
    lymph = LymphocyteMask(meta, np.random.default_rng(0).random(meta.shape) < 0.1)
    rng = np.random.default_rng(1)
    q, t = rng.normal(size=(24, 400)), rng.normal(size=(24, 400))
    angles = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    star = [[size / 2 + size * (0.2 + 0.2 * (i % 2)) * np.cos(a), size / 2 + size * (0.2 + 0.2 * (i % 2)) * np.sin(a)]
            for i, a in enumerate(angles)]
    ann = AnnotationSet.from_dict({"polygons": [{"label": "normal", "vertices": star}]})
    return {
        "signed_edt": lambda: signed_edt(labels).dist,
        "profile (fused EDT + histogram)": lambda: profile_labels(labels, lymph).tissue_px,
        "cdtw 24x24 pairs, n=400, r=1": lambda: cdtw_matrix(q, t, 1),
        "rasterize 200-vertex polygon": lambda: rasterize_annotations(ann, meta).labels,
        "counter RNG": lambda: pixel_uniforms(7, size * size, 0),
    }


def timed(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=4000, help="square grid side in pixels")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = [b for b in _backend.BACKENDS if b != "numba" or _backend.HAVE_NUMBA]
    print(f"grid {args.size} x {args.size}, best of {args.repeat}")
    print(f"{'kernel':36s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, fn in cases(args.size).items():
        times, outs = [], []
        for b in backends:
            with _backend.using_backend(b):
                fn()  # warm-up / JIT
                t, out = timed(fn, args.repeat)
            times.append(t)
            outs.append(out)
        same = all(np.array_equal(outs[0], o, equal_nan=True) for o in outs[1:])
        speed = f"{times[-1] / times[0]:9.1f}x" if len(times) == 2 else ""
        print(f"{name:36s}" + "".join(f"{t:11.3f}s" for t in times) + speed + ("" if same else "  MISMATCH"))


if __name__ == "__main__":
    main()
