//! Gershgorin regions: per-row (or per-column) disks, disk and region
//! containment, and union-area estimation.

use crate::matrix::{ComplexMatrix, MatrixError};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A closed disk in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Self {
        assert!(radius >= 0.0, "disk radius must be nonnegative");
        Self { center, radius }
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    Rows,
    Columns,
}

/// A finite union of closed disks, one per matrix row or column.
#[derive(Debug, Clone, PartialEq)]
pub struct GershRegion {
    pub mode: RegionMode,
    pub disks: Vec<Disk>,
}

/// Disk i is centered at `M_ii` with radius the off-diagonal absolute row
/// sum (row mode) or column sum (column mode).
pub fn region(m: &ComplexMatrix, mode: RegionMode) -> Result<GershRegion, MatrixError> {
    let n = m.require_square()?;
    let disks = (0..n)
        .map(|i| {
            let radius: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| match mode {
                    RegionMode::Rows => m.get(i, j).norm(),
                    RegionMode::Columns => m.get(j, i).norm(),
                })
                .sum();
            Disk::new(m.get(i, i), radius)
        })
        .collect();
    Ok(GershRegion { mode, disks })
}

/// Closed containment: `|c_in - c_out| <= r_out - r_in`, with a 1e-12
/// relative guard so exact boundary cases survive float rounding.
pub fn disk_contained(inner: &Disk, outer: &Disk) -> bool {
    let eps = 1.0e-12 * (1.0 + outer.radius.abs());
    (inner.center - outer.center).norm() <= outer.radius - inner.radius + eps
}

/// Per-disk criterion: every inner disk is contained in at least one single
/// outer disk. Sufficient (not necessary) for set containment, and exactly
/// what the containment theorem establishes.
pub fn region_contained(inner: &GershRegion, outer: &GershRegion) -> bool {
    inner.disks.iter().all(|d| outer.disks.iter().any(|o| disk_contained(d, o)))
}

/// Diagnostic set-containment check by boundary sampling: every inner disk's
/// boundary circle is sampled and each point tested against the outer union.
pub fn region_contained_sampled(inner: &GershRegion, outer: &GershRegion, samples: usize) -> bool {
    let inside_union = |p: Complex64| -> bool {
        outer
            .disks
            .iter()
            .any(|d| (p - d.center).norm() <= d.radius + 1.0e-9 * (1.0 + d.radius))
    };
    inner.disks.iter().all(|d| {
        (0..samples).all(|s| {
            let angle = 2.0 * std::f64::consts::PI * s as f64 / samples as f64;
            let p = d.center + Complex64::new(angle.cos(), angle.sin()) * d.radius;
            inside_union(p)
        })
    })
}

/// Area of the union of disks to relative accuracy `tol`. Zero, one, and two
/// effective disks are exact (lens formula); more use an adaptive grid.
pub fn union_area(region: &GershRegion, tol: f64) -> f64 {
    assert!(tol > 0.0, "tolerance must be positive");
    // Disks wholly inside another contribute nothing; dropping them keeps
    // the small-count exact paths reachable. Keep the first of duplicates.
    let disks = &region.disks;
    let mut kept: Vec<Disk> = Vec::new();
    for (i, d) in disks.iter().enumerate() {
        // drop a disk contained in another; mutual containment (identical
        // disks up to the epsilon guard) keeps the earliest
        let redundant = disks
            .iter()
            .enumerate()
            .any(|(j, o)| j != i && disk_contained(d, o) && (!disk_contained(o, d) || j < i));
        if !redundant {
            kept.push(*d);
        }
    }
    match kept.len() {
        0 => 0.0,
        1 => kept[0].area(),
        2 => two_disk_union(&kept[0], &kept[1]),
        _ => adaptive_union_area(&kept, tol),
    }
}

fn two_disk_union(a: &Disk, b: &Disk) -> f64 {
    let d = (a.center - b.center).norm();
    if d >= a.radius + b.radius {
        return a.area() + b.area();
    }
    if d <= (a.radius - b.radius).abs() {
        return a.area().max(b.area());
    }
    a.area() + b.area() - lens_area(d, a.radius, b.radius)
}

/// Intersection area of two overlapping circles at center distance d.
fn lens_area(d: f64, r1: f64, r2: f64) -> f64 {
    let acos_clamped = |x: f64| x.clamp(-1.0, 1.0).acos();
    let a1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1);
    let a2 = (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2);
    let tri = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    r1 * r1 * acos_clamped(a1) + r2 * r2 * acos_clamped(a2) - 0.5 * tri.max(0.0).sqrt()
}

#[derive(Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

fn adaptive_union_area(disks: &[Disk], tol: f64) -> f64 {
    let x0 = disks.iter().map(|d| d.center.re - d.radius).fold(f64::INFINITY, f64::min);
    let x1 = disks.iter().map(|d| d.center.re + d.radius).fold(f64::NEG_INFINITY, f64::max);
    let y0 = disks.iter().map(|d| d.center.im - d.radius).fold(f64::INFINITY, f64::min);
    let y1 = disks.iter().map(|d| d.center.im + d.radius).fold(f64::NEG_INFINITY, f64::max);
    let bbox = Rect { x0, y0, x1, y1 };
    let mut depth = 6;
    loop {
        let (inside, uncertain) = classify_area(disks, bbox, depth);
        let estimate = inside + uncertain / 2.0;
        if uncertain / 2.0 <= tol * estimate.max(f64::MIN_POSITIVE) || depth >= 24 {
            return estimate;
        }
        depth += 2;
    }
}

fn classify_area(disks: &[Disk], cell: Rect, depth: u32) -> (f64, f64) {
    // cell fully inside one disk: all four corners inside (disks are convex)
    let corners = [
        Complex64::new(cell.x0, cell.y0),
        Complex64::new(cell.x1, cell.y0),
        Complex64::new(cell.x0, cell.y1),
        Complex64::new(cell.x1, cell.y1),
    ];
    if disks
        .iter()
        .any(|d| corners.iter().all(|&p| (p - d.center).norm_sqr() <= d.radius * d.radius))
    {
        return (cell.area(), 0.0);
    }
    // cell disjoint from every disk: nearest point of the rect is outside
    let disjoint = disks.iter().all(|d| {
        let nx = d.center.re.clamp(cell.x0, cell.x1);
        let ny = d.center.im.clamp(cell.y0, cell.y1);
        let dist2 = (d.center.re - nx).powi(2) + (d.center.im - ny).powi(2);
        dist2 >= d.radius * d.radius
    });
    if disjoint {
        return (0.0, 0.0);
    }
    if depth == 0 {
        return (0.0, cell.area());
    }
    let mx = 0.5 * (cell.x0 + cell.x1);
    let my = 0.5 * (cell.y0 + cell.y1);
    let children = [
        Rect { x0: cell.x0, y0: cell.y0, x1: mx, y1: my },
        Rect { x0: mx, y0: cell.y0, x1: cell.x1, y1: my },
        Rect { x0: cell.x0, y0: my, x1: mx, y1: cell.y1 },
        Rect { x0: mx, y0: my, x1: cell.x1, y1: cell.y1 },
    ];
    let mut inside = 0.0;
    let mut uncertain = 0.0;
    for child in children {
        let (i, u) = classify_area(disks, child, depth - 1);
        inside += i;
        uncertain += u;
    }
    (inside, uncertain)
}

#[derive(Serialize, Deserialize)]
struct DiskJson {
    center: [f64; 2],
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct RegionJson {
    mode: RegionMode,
    disks: Vec<DiskJson>,
}

impl Serialize for GershRegion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RegionJson {
            mode: self.mode,
            disks: self
                .disks
                .iter()
                .map(|d| DiskJson { center: [d.center.re, d.center.im], radius: d.radius })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GershRegion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RegionJson::deserialize(d)?;
        let disks = raw
            .disks
            .into_iter()
            .map(|d| {
                if d.radius < 0.0 {
                    Err(D::Error::custom("negative disk radius"))
                } else {
                    Ok(Disk::new(Complex64::new(d.center[0], d.center[1]), d.radius))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(GershRegion { mode: raw.mode, disks })
    }
}
