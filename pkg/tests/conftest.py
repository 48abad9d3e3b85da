import numpy as np
import pytest

from latent_guard.data import ImageDataset


# acceptance suite: one visible PASS/FAIL/SKIP line per criterion
def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {name}: {status}")
    elif report.when == "setup" and report.skipped:
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else report.longrepr
        print(f"\nACCEPTANCE {name}: SKIPPED ({reason})")


# ---------------------------------------------------------------------------
# synthetic image data (MNIST-shaped, procedurally generated)
# ---------------------------------------------------------------------------

# one blob center per class, spread on a ring so classes are well separated
_CENTERS = [
    (14 + 7 * np.cos(2 * np.pi * c / 10), 14 + 7 * np.sin(2 * np.pi * c / 10))
    for c in range(10)
]


def synthetic_digits(n, seed, n_classes=10):
    """Gaussian-bump images: each class is a blob at a class-specific spot."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_classes, size=n)
    yy, xx = np.mgrid[0:28, 0:28]
    images = np.empty((n, 1, 28, 28))
    for i, c in enumerate(labels):
        cy, cx = _CENTERS[c]
        cy += rng.uniform(-1.5, 1.5)
        cx += rng.uniform(-1.5, 1.5)
        sigma = 2.0 + 0.3 * (c % 3)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
        amp = rng.uniform(0.7, 1.0)
        noise = rng.normal(0, 0.02, size=(28, 28))
        images[i, 0] = np.clip(amp * bump + noise, 0.0, 1.0)
    return ImageDataset(images=images, labels=labels)


@pytest.fixture(scope="session")
def tiny_train_set():
    """200 class-0 images for quick training smoke runs."""
    return synthetic_digits(200, seed=11, n_classes=1)
