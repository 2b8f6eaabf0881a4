"""Bootstrap resampling helpers."""
import numpy as np

CHUNK = 32


def bootstrap_counts(n, n_boot, seed, chunk=CHUNK):
    """Yield ``(k, n)`` arrays of multinomial resample counts, ``n_boot`` rows
    in total, deterministically from ``seed``."""
    rng = np.random.Generator(np.random.Philox(key=int(seed) % 2**64))
    done = 0
    while done < n_boot:
        k = min(chunk, n_boot - done)
        idx = rng.integers(0, n, size=(k, n))
        counts = np.zeros((k, n))
        for row in range(k):
            counts[row] = np.bincount(idx[row], minlength=n)
        yield counts
        done += k


def bootstrap_means(samples, n_boot=1000, seed=0):
    """Bootstrap replicates of the column means of ``samples`` (N, m).

    Complex input is handled through separate real and imaginary products.
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    cplx = np.iscomplexobj(samples)
    if cplx:
        re_part = np.ascontiguousarray(samples.real)
        im_part = np.ascontiguousarray(samples.imag)
    out = []
    for counts in bootstrap_counts(n, n_boot, seed):
        if cplx:
            out.append((counts @ re_part + 1j * (counts @ im_part)) / n)
        else:
            out.append(counts @ samples / n)
    return np.concatenate(out, axis=0)
