//! Concentric-square field partition: three nested squares around the field
//! centre cut the field into an inner square plus two rings, and each ring is
//! split into four congruent rectangular segments.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance.
    pub fn distance(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Chebyshev distance: max of the axis offsets. A point is inside the
    /// axis-aligned square of half-width `d` around `c` iff `chebyshev(c) <= d`.
    pub fn chebyshev(&self, other: Point) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

/// The four corners of an axis-aligned square, named by position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareCorners {
    pub top_right: Point,
    pub bottom_right: Point,
    pub top_left: Point,
    pub bottom_left: Point,
}

impl SquareCorners {
    pub fn side(&self) -> f64 {
        self.top_right.x - self.top_left.x
    }
}

/// Corners of the square of half-width `d` centred on `center`.
/// Right-hand corners carry +d on x, top corners +d on y.
pub fn internal_square_corners(center: Point, d: f64) -> Result<SquareCorners> {
    if d < 0.0 || !d.is_finite() {
        return Err(SimError::Geometry(format!(
            "square half-width must be non-negative and finite, got {d}"
        )));
    }
    Ok(SquareCorners {
        top_right: Point::new(center.x + d, center.y + d),
        bottom_right: Point::new(center.x + d, center.y - d),
        top_left: Point::new(center.x - d, center.y + d),
        bottom_left: Point::new(center.x - d, center.y - d),
    })
}

/// Same construction for the n-th concentric square; the corner naming
/// convention is identical for every square in the family.
pub fn nth_square_corners(center: Point, d_n: f64) -> Result<SquareCorners> {
    internal_square_corners(center, d_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Inner,
    Middle,
    Outer,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Inner, Region::Middle, Region::Outer];

    /// Hop rank toward the base station: Outer=3, Middle=2, Inner=1 (BS is 0).
    /// Inner-ward routes strictly decrease this rank.
    pub fn rank(self) -> u8 {
        match self {
            Region::Inner => 1,
            Region::Middle => 2,
            Region::Outer => 3,
        }
    }

    pub fn index(self) -> usize {
        self.rank() as usize - 1
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Inner => "inner",
            Region::Middle => "middle",
            Region::Outer => "outer",
        }
    }
}

/// One rectangular cluster area. `min`/`max` are the lower-left and
/// upper-right corners; `midpoint` is the centroid, used as the anchor for
/// first-round cluster-head election.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub region: Region,
    pub index: usize,
    pub min: Point,
    pub max: Point,
    pub midpoint: Point,
}

impl Segment {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// The full partition: centre, the three square half-widths (strictly
/// increasing, the last one spanning the field), the squares themselves and
/// the nine segments tiling the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPartition {
    pub center: Point,
    pub d_list: Vec<f64>,
    pub field_side: f64,
    pub squares: Vec<SquareCorners>,
    pub segments: Vec<Segment>,
}

impl FieldPartition {
    /// Equal-width rings: d = side/6, 2·side/6, side/2.
    pub fn new(field_side: f64) -> Result<Self> {
        Self::with_distances(
            field_side,
            [field_side / 6.0, field_side / 3.0, field_side / 2.0],
        )
    }

    pub fn with_distances(field_side: f64, d_list: [f64; 3]) -> Result<Self> {
        if field_side <= 0.0 || !field_side.is_finite() {
            return Err(SimError::Geometry(format!(
                "field side must be positive and finite, got {field_side}"
            )));
        }
        if !(d_list[0] > 0.0 && d_list[0] < d_list[1] && d_list[1] < d_list[2]) {
            return Err(SimError::Geometry(format!(
                "square half-widths must be strictly increasing and positive, got {d_list:?}"
            )));
        }
        let half = field_side / 2.0;
        if (d_list[2] - half).abs() > 1e-9 * field_side.max(1.0) {
            return Err(SimError::Geometry(format!(
                "outermost half-width {} must equal half the field side {half}",
                d_list[2]
            )));
        }
        let center = Point::new(half, half);
        let squares = d_list
            .iter()
            .map(|&d| internal_square_corners(center, d))
            .collect::<Result<Vec<_>>>()?;
        let segments = build_segments(center, &d_list);
        Ok(FieldPartition {
            center,
            d_list: d_list.to_vec(),
            field_side,
            squares,
            segments,
        })
    }

    pub fn inner_half_width(&self) -> f64 {
        self.d_list[0]
    }

    pub fn contains(&self, p: Point) -> bool {
        p.chebyshev(self.center) <= self.d_list[2]
    }

    /// Region of a point. Boundary points belong to the innermost qualifying
    /// region; points beyond the outermost square are out of field.
    pub fn classify(&self, p: Point) -> Result<Region> {
        let c = p.chebyshev(self.center);
        if c <= self.d_list[0] {
            Ok(Region::Inner)
        } else if c <= self.d_list[1] {
            Ok(Region::Middle)
        } else if c <= self.d_list[2] {
            Ok(Region::Outer)
        } else {
            Err(SimError::OutOfField { x: p.x, y: p.y })
        }
    }

    /// The unique segment owning a point: first match in index order among the
    /// segments of the point's region (ties only occur on shared rectangle
    /// edges, which are measure zero).
    pub fn segment_of(&self, p: Point) -> Result<&Segment> {
        let region = self.classify(p)?;
        self.segments
            .iter()
            .find(|s| s.region == region && s.contains(p))
            .ok_or(SimError::Geometry(format!(
                "no segment covers ({}, {})",
                p.x, p.y
            )))
    }

    pub fn segments_of(&self, region: Region) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.region == region)
    }
}

/// Tile the partition into 9 segments: the inner square plus a pinwheel of
/// four congruent rectangles per ring. For half-widths a < b the ring
/// rectangles each span one side of the outer square and absorb one corner.
pub fn build_segments(center: Point, d_list: &[f64; 3]) -> Vec<Segment> {
    let (cx, cy) = (center.x, center.y);
    let mut segments = Vec::with_capacity(9);
    let d = d_list[0];
    segments.push(rect(
        Region::Inner,
        0,
        Point::new(cx - d, cy - d),
        Point::new(cx + d, cy + d),
    ));
    let mut index = 1;
    for (ring, pair) in [
        (Region::Middle, (d_list[0], d_list[1])),
        (Region::Outer, (d_list[1], d_list[2])),
    ] {
        let (a, b) = pair;
        let rects = [
            // north, east, south, west
            (Point::new(cx - b, cy + a), Point::new(cx + a, cy + b)),
            (Point::new(cx + a, cy - a), Point::new(cx + b, cy + b)),
            (Point::new(cx - a, cy - b), Point::new(cx + b, cy - a)),
            (Point::new(cx - b, cy - b), Point::new(cx - a, cy + a)),
        ];
        for (min, max) in rects {
            segments.push(rect(ring, index, min, max));
            index += 1;
        }
    }
    segments
}

fn rect(region: Region, index: usize, min: Point, max: Point) -> Segment {
    Segment {
        region,
        index,
        min,
        max,
        midpoint: Point::new((min.x + max.x) / 2.0, (min.y + max.y) / 2.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn innermost_square_corners_follow_the_sign_convention() {
        let c = internal_square_corners(Point::new(50.0, 50.0), 16.0).unwrap();
        assert_eq!(c.top_right, Point::new(66.0, 66.0));
        assert_eq!(c.bottom_right, Point::new(66.0, 34.0));
        assert_eq!(c.top_left, Point::new(34.0, 66.0));
        assert_eq!(c.bottom_left, Point::new(34.0, 34.0));
        assert_eq!(c.side(), 32.0);
    }

    #[test]
    fn nth_square_uses_the_same_convention() {
        let c = nth_square_corners(Point::new(50.0, 50.0), 50.0).unwrap();
        assert_eq!(c.top_right, Point::new(100.0, 100.0));
        assert_eq!(c.bottom_left, Point::new(0.0, 0.0));
        // degenerate square collapses onto the centre
        let z = nth_square_corners(Point::new(3.0, 4.0), 0.0).unwrap();
        assert_eq!(z.top_right, Point::new(3.0, 4.0));
    }

    #[test]
    fn negative_half_width_is_rejected() {
        assert!(internal_square_corners(Point::new(0.0, 0.0), -1.0).is_err());
        assert!(nth_square_corners(Point::new(0.0, 0.0), f64::NAN).is_err());
    }

    #[test]
    fn classify_picks_the_innermost_qualifying_region() {
        // side 96 keeps every ring width exactly representable
        let fp = FieldPartition::new(96.0).unwrap();
        assert_eq!(fp.d_list, [16.0, 32.0, 48.0]);
        assert_eq!(fp.classify(Point::new(48.0, 48.0)).unwrap(), Region::Inner);
        assert_eq!(fp.classify(Point::new(75.0, 48.0)).unwrap(), Region::Middle);
        assert_eq!(fp.classify(Point::new(91.0, 91.0)).unwrap(), Region::Outer);
        // boundary points belong to the innermost qualifying region
        assert_eq!(fp.classify(Point::new(64.0, 48.0)).unwrap(), Region::Inner);
        assert_eq!(fp.classify(Point::new(16.0, 48.0)).unwrap(), Region::Middle);
        assert_eq!(fp.classify(Point::new(96.0, 96.0)).unwrap(), Region::Outer);
        assert!(fp.classify(Point::new(96.1, 48.0)).is_err());
        assert!(fp.classify(Point::new(-0.5, 48.0)).is_err());
    }

    #[test]
    fn partition_has_nine_segments_tiling_the_field() {
        let fp = FieldPartition::new(100.0).unwrap();
        assert_eq!(fp.segments.len(), 9);
        assert_eq!(fp.segments_of(Region::Inner).count(), 1);
        assert_eq!(fp.segments_of(Region::Middle).count(), 4);
        assert_eq!(fp.segments_of(Region::Outer).count(), 4);
        // ring rectangles are congruent: area (a+b)(b-a)
        for (region, a, b) in [
            (Region::Middle, fp.d_list[0], fp.d_list[1]),
            (Region::Outer, fp.d_list[1], fp.d_list[2]),
        ] {
            for s in fp.segments_of(region) {
                let area = (s.max.x - s.min.x) * (s.max.y - s.min.y);
                assert!((area - (a + b) * (b - a)).abs() < 1e-9);
            }
        }
        // total area equals the field
        let total: f64 = fp
            .segments
            .iter()
            .map(|s| (s.max.x - s.min.x) * (s.max.y - s.min.y))
            .sum();
        assert!((total - 100.0 * 100.0).abs() < 1e-6);
    }

    #[test]
    fn segment_midpoints_classify_into_their_own_region() {
        let fp = FieldPartition::new(100.0).unwrap();
        for s in &fp.segments {
            assert_eq!(
                fp.classify(s.midpoint).unwrap(),
                s.region,
                "segment {}",
                s.index
            );
        }
    }

    #[test]
    fn sampled_points_land_in_exactly_one_segment() {
        let fp = FieldPartition::new(100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let p = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let region = fp.classify(p).unwrap();
            let owners: Vec<_> = fp
                .segments
                .iter()
                .filter(|s| s.region == region && s.contains(p))
                .collect();
            assert_eq!(owners.len(), 1, "point ({}, {})", p.x, p.y);
            assert_eq!(fp.segment_of(p).unwrap().index, owners[0].index);
        }
    }

    #[test]
    fn classify_is_invariant_under_quarter_turns() {
        let fp = FieldPartition::new(100.0).unwrap();
        let c = fp.center;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000 {
            let p = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let r0 = fp.classify(p).unwrap();
            let q = Point::new(c.x - (p.y - c.y), c.y + (p.x - c.x));
            assert_eq!(fp.classify(q).unwrap(), r0);
        }
    }

    #[test]
    fn squares_nest_monotonically() {
        let fp = FieldPartition::new(100.0).unwrap();
        for w in fp.d_list.windows(2) {
            assert!(w[0] < w[1]);
        }
        for (sq, &d) in fp.squares.iter().zip(&fp.d_list) {
            assert!((sq.side() - 2.0 * d).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_ring_configurations_are_rejected() {
        assert!(FieldPartition::with_distances(100.0, [20.0, 10.0, 50.0]).is_err());
        assert!(FieldPartition::with_distances(100.0, [10.0, 20.0, 30.0]).is_err());
        assert!(FieldPartition::new(0.0).is_err());
        assert!(FieldPartition::new(-5.0).is_err());
    }
}
