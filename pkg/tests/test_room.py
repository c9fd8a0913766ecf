import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfsplace.room import (
    ImageSource,
    RoomModel,
    image_sources,
    room_transfer,
    room_transfer_coeffs,
    room_transfer_many,
)
from sfsplace.wavefield import (
    CircularRegion,
    Frequency,
    Point2,
    evaluate_expansion_many,
    expansion_for,
    green2d,
)

F1K = Frequency(1000.0)
# asymmetric everything so axis/wall mixups cannot cancel
ROOM = RoomModel(2.0, 2.0, (0.5, 0.6, 0.7, 0.8), max_reflection_order=2)
STUDY_ROOM = RoomModel.uniform(5.0, 4.0, 0.8, max_reflection_order=3)


def _unfold_images(room, source, max_order):
    # oracle: grow the image set by literally mirroring across each wall,
    # keeping the first (minimal reflection count) arrival at a position
    walls = [
        (0, -0.5 * room.size_x, room.reflection[0]),
        (0, 0.5 * room.size_x, room.reflection[1]),
        (1, -0.5 * room.size_y, room.reflection[2]),
        (1, 0.5 * room.size_y, room.reflection[3]),
    ]

    def key(p):
        return (round(p[0], 9), round(p[1], 9))

    seen = {key(source)}
    out = [(source[0], source[1], 1.0, 0)]
    frontier = [(tuple(source), 1.0)]
    for count in range(1, max_order + 1):
        grown = []
        for pos, gain in frontier:
            for axis, wall, beta in walls:
                mirrored = list(pos)
                mirrored[axis] = 2.0 * wall - pos[axis]
                mirrored = tuple(mirrored)
                if key(mirrored) in seen:
                    continue
                seen.add(key(mirrored))
                grown.append((mirrored, gain * beta))
                if gain * beta != 0.0:
                    out.append((mirrored[0], mirrored[1], gain * beta, count))
        frontier = grown
    return out


def _as_multiset(items):
    return sorted((round(x, 9), round(y, 9), round(g, 12), c) for (x, y, g, c) in items)


def test_order_zero_is_free_field():
    room = RoomModel.uniform(5.0, 4.0, 0.9, max_reflection_order=0)
    src = (1.0, -0.5)
    imgs = image_sources(room, src)
    assert len(imgs) == 1
    assert imgs[0] == ImageSource(Point2(1.0, -0.5), 1.0, 0)
    rcv = (-0.7, 0.4)
    assert room_transfer(room, rcv, src, F1K) == pytest.approx(green2d(rcv, src, F1K))


def test_hand_enumerated_two_by_two_room():
    # 2 x 2 room, source (0.3, -0.4), all images with at most two bounces
    imgs = image_sources(ROOM, (0.3, -0.4))
    expected = [
        (0.3, -0.4, 1.0, 0),
        # one bounce
        (-2.3, -0.4, 0.5, 1),   # left
        (1.7, -0.4, 0.6, 1),    # right
        (0.3, -1.6, 0.7, 1),    # bottom
        (0.3, 2.4, 0.8, 1),     # top
        # two bounces, same axis
        (4.3, -0.4, 0.30, 2),   # left+right, shifted right
        (-3.7, -0.4, 0.30, 2),  # left+right, shifted left
        (0.3, 3.6, 0.56, 2),    # bottom+top, shifted up
        (0.3, -4.4, 0.56, 2),   # bottom+top, shifted down
        # two bounces, one per axis
        (-2.3, -1.6, 0.35, 2),
        (-2.3, 2.4, 0.40, 2),
        (1.7, -1.6, 0.42, 2),
        (1.7, 2.4, 0.48, 2),
    ]
    got = [(im.position.x, im.position.y, im.gain, im.order) for im in imgs]
    assert _as_multiset(got) == _as_multiset(expected)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_images_match_unfolding_oracle(seed):
    rng = np.random.default_rng(seed)
    room = RoomModel(
        float(rng.uniform(1.5, 6.0)),
        float(rng.uniform(1.5, 6.0)),
        tuple(rng.uniform(0.05, 1.0, 4)),
        max_reflection_order=5,
    )
    src = (
        float(rng.uniform(-0.45, 0.45) * room.size_x),
        float(rng.uniform(-0.45, 0.45) * room.size_y),
    )
    got = [(im.position.x, im.position.y, im.gain, im.order) for im in image_sources(room, src)]
    assert _as_multiset(got) == _as_multiset(_unfold_images(room, src, 5))


@pytest.mark.parametrize("order,count", [(0, 1), (1, 5), (2, 13), (10, 221)])
def test_image_count_by_order(order, count):
    # shell t >= 1 holds 4t images, so 1 + 4 * order(order+1)/2 in total
    room = RoomModel.uniform(5.0, 4.0, 0.8, max_reflection_order=order)
    assert len(image_sources(room, (0.5, 0.3))) == count


def test_direct_source_first_and_orders_sorted():
    imgs = image_sources(STUDY_ROOM, (-1.5, -1.5))
    assert imgs[0].position == Point2(-1.5, -1.5)
    assert imgs[0].gain == 1.0
    assert imgs[0].order == 0
    orders = [im.order for im in imgs]
    assert orders == sorted(orders)


def test_zero_reflection_walls_prune_images():
    dead = RoomModel.uniform(4.0, 3.0, 0.0, max_reflection_order=10)
    assert len(image_sources(dead, (1.0, 1.0))) == 1
    # only the left wall reflects: the sole surviving image is one bounce off it
    one_wall = RoomModel(4.0, 3.0, (0.5, 0.0, 0.0, 0.0), max_reflection_order=10)
    imgs = image_sources(one_wall, (1.0, 1.0))
    assert len(imgs) == 2
    assert imgs[1] == ImageSource(Point2(-5.0, 1.0), 0.5, 1)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_image_positions_distinct_and_exterior(seed):
    rng = np.random.default_rng(seed)
    room = RoomModel(
        float(rng.uniform(1.0, 8.0)),
        float(rng.uniform(1.0, 8.0)),
        tuple(rng.uniform(0.1, 1.0, 4)),
        max_reflection_order=4,
    )
    src = (
        float(rng.uniform(-0.49, 0.49) * room.size_x),
        float(rng.uniform(-0.49, 0.49) * room.size_y),
    )
    imgs = image_sources(room, src)
    keys = {(round(im.position.x, 9), round(im.position.y, 9)) for im in imgs}
    assert len(keys) == len(imgs)
    for im in imgs[1:]:
        assert not room.contains(im.position)
        assert 0.0 < im.gain <= max(room.reflection) ** im.order


def test_room_transfer_is_gain_weighted_image_sum():
    src = (-1.5, -1.5)
    rcv = (0.8, 0.1)
    total = sum(
        im.gain * green2d(rcv, im.position, F1K) for im in image_sources(STUDY_ROOM, src)
    )
    assert room_transfer(STUDY_ROOM, rcv, src, F1K) == pytest.approx(total, rel=1e-12)


def test_room_transfer_mirror_symmetry():
    # physics check: flipping the room left-right (swapping those wall
    # coefficients) and negating all x coordinates must preserve the field
    room = RoomModel(3.0, 2.5, (0.3, 0.9, 0.6, 0.4), max_reflection_order=6)
    flipped = RoomModel(3.0, 2.5, (0.9, 0.3, 0.6, 0.4), max_reflection_order=6)
    src, rcv = (0.7, -0.3), (-0.4, 0.8)
    a = room_transfer(room, rcv, src, F1K)
    b = room_transfer(flipped, (-rcv[0], rcv[1]), (-src[0], src[1]), F1K)
    assert a == pytest.approx(b, rel=1e-12)


def test_room_transfer_many_matches_scalar():
    src = (0.6, 0.4)
    pts = np.array([[0.0, 0.0], [-0.5, 0.7], [0.3, -0.9]])
    vals = room_transfer_many(ROOM, pts, src, F1K)
    for p, v in zip(pts, vals):
        assert v == pytest.approx(room_transfer(ROOM, p, src, F1K))


def test_room_transfer_coeffs_reproduce_interior_field():
    # expansion of the reverberant field vs the direct image sum, sampled
    # inside the region (order rule leaves an ~1e-6 tail at the very rim)
    region = CircularRegion(Point2(0.5, 0.3), 0.5)
    cfg = expansion_for(region, F1K)
    src = (-1.5, -1.5)
    coeffs = room_transfer_coeffs(STUDY_ROOM, src, cfg, F1K)
    rng = np.random.default_rng(7)
    r = region.radius * 0.95 * np.sqrt(rng.uniform(0.0, 1.0, 50))
    th = rng.uniform(0.0, 2.0 * np.pi, 50)
    pts = np.c_[region.center.x + r * np.cos(th), region.center.y + r * np.sin(th)]
    approx = evaluate_expansion_many(coeffs, pts, F1K)
    exact = room_transfer_many(STUDY_ROOM, pts, src, F1K)
    scale = np.max(np.abs(exact))
    assert np.max(np.abs(approx - exact)) / scale < 1e-5


def test_room_transfer_coeffs_order_zero_matches_point_source():
    from sfsplace.wavefield import pointsource_coeffs

    region = CircularRegion(Point2(0.5, 0.3), 0.5)
    cfg = expansion_for(region, F1K)
    room = RoomModel.uniform(5.0, 4.0, 0.8, max_reflection_order=0)
    src = (-1.5, -1.5)
    got = room_transfer_coeffs(room, src, cfg, F1K)
    want = pointsource_coeffs(src, cfg, F1K)
    np.testing.assert_allclose(got.values, want.values, rtol=1e-12)


def test_source_on_or_outside_walls_rejected():
    with pytest.raises(ValueError):
        image_sources(STUDY_ROOM, (2.5, 0.0))  # on the right wall
    with pytest.raises(ValueError):
        image_sources(STUDY_ROOM, (0.0, 7.0))


def test_receiver_coincident_with_source_rejected():
    with pytest.raises(ValueError):
        room_transfer(STUDY_ROOM, (1.0, 1.0), (1.0, 1.0), F1K)


def test_image_inside_validity_disc_rejected():
    room = RoomModel.uniform(2.0, 2.0, 0.8, max_reflection_order=2)
    region = CircularRegion(Point2(0.8, 0.0), 0.5)
    cfg = expansion_for(region, F1K)
    # the right-wall image of (0.9, 0) lands at (1.1, 0), 0.3 from the center
    with pytest.raises(ValueError):
        room_transfer_coeffs(room, (0.9, 0.0), cfg, F1K)


def test_room_model_validation():
    with pytest.raises(ValueError):
        RoomModel(-1.0, 2.0, (0.5, 0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        RoomModel(2.0, 2.0, (0.5, 0.5, 0.5, 1.5))
    with pytest.raises(ValueError):
        RoomModel(2.0, 2.0, (0.5, 0.5, 0.5, 0.5), max_reflection_order=-1)
    with pytest.raises(ValueError):
        RoomModel(2.0, 2.0, (0.5, 0.5, 0.5))
