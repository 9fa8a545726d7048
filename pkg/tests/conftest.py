import numpy as np
import pytest
from PIL import Image


def _noise_image(rs: np.random.RandomState, h: int, w: int) -> np.ndarray:
    # varied synthetic textures: random palette, blob scale, and contrast,
    # so a pool of a few images still spans a wide appearance range
    scale = rs.choice([2, 4, 8, 16])
    base = rs.randint(0, 256, (h // scale + 1, w // scale + 1, 3))
    img = np.kron(base, np.ones((scale, scale, 1)))[:h, :w]
    tint = rs.randint(0, 256, 3)
    weight = rs.uniform(0.2, 0.8)
    img = weight * img + (1 - weight) * tint
    img = img + rs.randint(-40, 41, (h, w, 3)) * rs.uniform(0.2, 1.0)
    return np.clip(img, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def static_pool_dir(tmp_path_factory):
    """Ten deterministic noise PNGs, a usable static-image pool."""
    root = tmp_path_factory.mktemp("static_pool")
    rs = np.random.RandomState(1234)
    for i in range(10):
        Image.fromarray(_noise_image(rs, 96, 96)).save(root / f"tex_{i:03d}.png")
    return str(root)


@pytest.fixture(scope="session")
def video_pool_dir(tmp_path_factory):
    """Three texture-video entries with 4 frames each."""
    root = tmp_path_factory.mktemp("video_pool")
    rs = np.random.RandomState(99)
    for i in range(3):
        sub = root / f"vid_{i:02d}"
        sub.mkdir()
        for t in range(4):
            Image.fromarray(_noise_image(rs, 64, 64)).save(sub / f"{t}.png")
    return str(root)


def two_tone_texture(rs: np.random.RandomState, h: int, w: int) -> np.ndarray:
    """Hard-edged two-color pattern (blocks, stripes, or checkers) with its
    own random palette; a desk-scale stand-in for large texture pools."""
    c1 = rs.randint(0, 256, 3)
    c2 = rs.randint(0, 256, 3)
    kind = rs.randint(3)
    if kind == 0:
        scale = rs.choice([2, 3, 4, 6, 8, 12])
        mask = rs.rand(h // scale + 1, w // scale + 1) > 0.5
        mask = np.kron(mask, np.ones((scale, scale), bool))[:h, :w]
    elif kind == 1:
        period = rs.randint(4, 20)
        ang = rs.uniform(0, np.pi)
        yy, xx = np.mgrid[0:h, 0:w]
        phase = rs.uniform(0, 2 * np.pi)
        mask = np.sin(2 * np.pi * (np.cos(ang) * xx + np.sin(ang) * yy) / period + phase) > 0
    else:
        s = rs.randint(3, 16)
        yy, xx = np.mgrid[0:h, 0:w]
        mask = ((xx // s + yy // s) % 2).astype(bool)
    return np.where(mask[:, :, None], c1[None, None, :], c2[None, None, :]).astype(np.uint8)


@pytest.fixture(scope="session")
def desk_texture_pool_dir(tmp_path_factory):
    """256 distinct two-tone textures; large enough that texture palettes
    rarely repeat across a 200-video desk dataset."""
    root = tmp_path_factory.mktemp("desk_pool")
    rs = np.random.RandomState(7)
    for i in range(256):
        Image.fromarray(two_tone_texture(rs, 96, 96)).save(root / f"t{i:03d}.png")
    return str(root)
