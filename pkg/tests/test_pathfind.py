import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beaconplan.errors import NoWalkableAreaError, ZoneError
from beaconplan.imagecore import BinaryImage, label_regions
from beaconplan.pathfind import (
    IndoorPath,
    Zone,
    apply_zones,
    extract_indoor_path,
    rasterize_polygon,
    segment_rooms,
    zone_level_grid,
)


def point_in_polygon(px, py, poly):
    """Independent even-odd ray-casting oracle."""
    inside = False
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        if (ay > py) != (by > py):
            x_cross = (bx - ax) * (py - ay) / (by - ay) + ax
            if px < x_cross:
                inside = not inside
    return inside


def mini_plan():
    """Tiny plan: margin, outer wall, corridor, 3 rooms with arc-closed doors."""
    bits = np.zeros((40, 60), dtype=bool)
    bits[2, 2:58] = True
    bits[37, 2:58] = True
    bits[2:38, 2] = True
    bits[2:38, 57] = True
    bits[25, 2:58] = True          # corridor/room divider
    bits[25:38, 20] = True         # room partitions
    bits[25:38, 40] = True
    for c0 in (10, 30, 50):        # door openings with swing arcs
        bits[25, c0:c0 + 2] = False
        bits[22:25, c0 - 1] = True             # door leaf
        bits[22, c0] = True                    # quarter arc
        bits[23, c0 + 1] = True
        bits[24, c0 + 2] = True
    return BinaryImage(bits)


simple_polygons = st.lists(
    st.tuples(st.floats(1, 29), st.floats(1, 19)), min_size=3, max_size=8
).map(lambda pts: sorted(
    set(pts),
    key=lambda p: np.arctan2(p[1] - np.mean([q[1] for q in pts]),
                             p[0] - np.mean([q[0] for q in pts])),
)).filter(lambda pts: len(pts) >= 3)


class TestZone:
    def test_rejects_too_few_vertices(self):
        with pytest.raises(ZoneError):
            Zone([(0, 0), (5, 5)], level=1)

    def test_rejects_negative_level(self):
        with pytest.raises(ZoneError):
            Zone([(0, 0), (5, 0), (5, 5)], level=-1)

    def test_rejects_bowtie(self):
        with pytest.raises(ZoneError):
            Zone([(0, 0), (10, 10), (10, 0), (0, 10)], level=1)

    def test_accepts_triangle(self):
        Zone([(0, 0), (10, 0), (5, 8)], level=2)


class TestRasterizePolygon:
    def test_square_covers_expected_pixels(self):
        mask = rasterize_polygon([(2, 2), (6, 2), (6, 6), (2, 6)], (10, 10))
        assert mask[3, 3] and mask[5, 5]
        assert not mask[1, 3] and not mask[7, 3]
        assert mask.sum() == 16  # centres 2.5..5.5 in both axes

    @given(simple_polygons)
    @settings(max_examples=40, deadline=None)
    def test_matches_ray_casting_oracle(self, poly):
        mask = rasterize_polygon(poly, (22, 32))
        for y in range(22):
            for x in range(32):
                assert mask[y, x] == point_in_polygon(x + 0.5, y + 0.5, poly)


class TestApplyZones:
    def test_no_zones_is_identity(self):
        plan = mini_plan()
        out = apply_zones(plan, [], access_cutoff=1)
        assert np.array_equal(out.bits, plan.bits)

    def test_full_cover_zone_blocks_everything(self):
        plan = mini_plan()
        zone = Zone([(0, 0), (60, 0), (60, 40), (0, 40)], level=3)
        out = apply_zones(plan, [zone], access_cutoff=3)
        assert out.bits.all()

    def test_sub_cutoff_zone_leaves_classes_and_annotates(self):
        plan = mini_plan()
        zone = Zone([(5, 5), (15, 5), (15, 15), (5, 15)], level=1)
        out = apply_zones(plan, [zone], access_cutoff=2)
        assert np.array_equal(out.bits, plan.bits)
        levels = zone_level_grid([zone], access_cutoff=2, shape=plan.bits.shape)
        assert levels[10, 10] == 1
        assert levels[30, 30] == 0

    def test_out_of_bounds_rejected_with_index(self):
        plan = mini_plan()
        zones = [Zone([(1, 1), (5, 1), (5, 5)], level=1),
                 Zone([(0, 0), (99, 0), (99, 5)], level=1)]
        with pytest.raises(ZoneError) as err:
            apply_zones(plan, zones, access_cutoff=1)
        assert err.value.zone_index == 1

    def test_never_unblocks_and_monotone_in_cutoff(self):
        plan = mini_plan()
        zones = [Zone([(5, 5), (18, 5), (18, 18), (5, 18)], level=1),
                 Zone([(25, 5), (35, 5), (35, 12), (25, 12)], level=2)]
        lo = apply_zones(plan, zones, access_cutoff=1)
        hi = apply_zones(plan, zones, access_cutoff=2)
        assert (plan.bits <= lo.bits).all()
        assert (hi.bits <= lo.bits).all()  # lower cutoff masks a superset


class TestExtractIndoorPath:
    @staticmethod
    def blocks_plan():
        bits = np.ones((20, 30), dtype=bool)
        bits[2:4, 2:4] = False      # area 4
        bits[6:9, 6:9] = False      # area 9
        bits[10:15, 10:15] = False  # area 25
        return BinaryImage(bits)

    def test_picks_maximum_area(self):
        labels = label_regions(self.blocks_plan(), target="free-space")
        path = extract_indoor_path(labels)
        assert path.area == 25

    def test_after_masking_next_region_wins(self):
        plan = self.blocks_plan()
        zone = Zone([(9, 9), (16, 9), (16, 16), (9, 16)], level=5)
        masked = apply_zones(plan, [zone], access_cutoff=5)
        path = extract_indoor_path(label_regions(masked, target="free-space"))
        assert path.area == 9

    def test_margin_never_wins(self):
        bits = np.ones((20, 20), dtype=bool)
        bits[0:20, 0] = False        # huge border strip = margin
        bits[5:8, 5:8] = False       # small interior region
        path = extract_indoor_path(label_regions(BinaryImage(bits), target="free-space"))
        assert path.area == 9

    def test_tie_break_lowest_label(self):
        bits = np.ones((10, 20), dtype=bool)
        bits[2:4, 2:4] = False
        bits[6:8, 10:12] = False
        labels = label_regions(BinaryImage(bits), target="free-space")
        path = extract_indoor_path(labels)
        assert path.source_label == min(s.label for s in labels.region_stats)

    def test_no_interior_region_raises(self):
        bits = np.ones((5, 5), dtype=bool)
        with pytest.raises(NoWalkableAreaError):
            extract_indoor_path(label_regions(BinaryImage(bits), target="free-space"))

    def test_corridor_is_path_in_mini_plan(self):
        plan = mini_plan()
        labels = label_regions(plan, target="free-space")
        path = extract_indoor_path(labels)
        assert path.mask.bits[10, 30]        # corridor pixel
        assert not path.mask.bits[30, 10]    # room pixel
        assert not path.mask.bits[0, 0]      # margin pixel


class TestSegmentRooms:
    def test_three_rooms_extracted(self):
        plan = mini_plan()
        path = extract_indoor_path(label_regions(plan, target="free-space"))
        rooms = segment_rooms(plan, path, min_area=20, dilation_radius=1)
        assert len(rooms) == 3
        for room in rooms:
            assert not (room.mask.bits & path.mask.bits).any()
        for a, b in [(0, 1), (0, 2), (1, 2)]:
            assert not (rooms[a].mask.bits & rooms[b].mask.bits).any()

    def test_min_area_filters_everything(self):
        plan = mini_plan()
        path = extract_indoor_path(label_regions(plan, target="free-space"))
        assert segment_rooms(plan, path, min_area=10_000, dilation_radius=1) == []

    def test_one_room_plan(self):
        bits = np.zeros((20, 20), dtype=bool)
        bits[2, 2:18] = True
        bits[17, 2:18] = True
        bits[2:18, 2] = True
        bits[2:18, 17] = True
        bits[10, 2:18] = True
        bits[10, 8:10] = False          # open door
        bits[7:10, 7] = True            # leaf
        bits[7, 8] = True               # arc
        bits[8, 9] = True
        bits[9, 10] = True
        plan = BinaryImage(bits)
        path = extract_indoor_path(label_regions(plan, target="free-space"))
        rooms = segment_rooms(plan, path, min_area=5, dilation_radius=1)
        assert len(rooms) == 1
