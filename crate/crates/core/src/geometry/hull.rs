//! Planar convex hulls (Andrew's monotone chain) and the first intrinsic
//! volume of a convex polygon.

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull in counter-clockwise order without collinear vertices.
/// A degenerate input returns one point or the two endpoints of a segment.
pub fn hull2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn perimeter(polygon: &[[f64; 2]]) -> f64 {
    match polygon.len() {
        0 | 1 => 0.0,
        n => (0..n)
            .map(|i| {
                let (a, b) = (polygon[i], polygon[(i + 1) % n]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum(),
    }
}

/// `V_1` of a convex polygon: half its perimeter. A segment has `V_1` equal
/// to its length and a point has `V_1 = 0`.
pub fn v1_of_2d_hull(polygon: &[[f64; 2]]) -> f64 {
    perimeter(polygon) / 2.0
}

/// Corner points of the boxes `C_z` of 2D sites.
pub fn box_corners(sites: &[crate::lattice::Site]) -> Vec<[f64; 2]> {
    sites
        .iter()
        .flat_map(|s| {
            let (x, y) = (f64::from(s.coord(0)), f64::from(s.coord(1)));
            [[x - 0.5, y - 0.5], [x + 0.5, y - 0.5], [x + 0.5, y + 0.5], [x - 0.5, y + 0.5]]
        })
        .collect()
}
