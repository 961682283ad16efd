//! Horizontal-plane range sensing: rays against the tank walls and riser cylinders.

use crate::scalar::Scalar;

/// Axis-aligned rectangle in the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub min_x: T,
    pub min_y: T,
    pub max_x: T,
    pub max_y: T,
}

/// Vertical cylinder seen from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle<T> {
    pub cx: T,
    pub cy: T,
    pub r: T,
}

/// Distance from a point inside `rect` to its boundary along the unit direction `(dx, dy)`.
///
/// Each axis contributes the parameter at which the ray leaves its slab; the
/// nearest of those is the wall that is hit first.
pub fn ray_rect_exit<T: Scalar>(ox: T, oy: T, dx: T, dy: T, rect: &Rect<T>) -> T {
    let mut t = T::infinity();
    if dx > T::zero() {
        t = t.min((rect.max_x - ox) / dx);
    } else if dx < T::zero() {
        t = t.min((rect.min_x - ox) / dx);
    }
    if dy > T::zero() {
        t = t.min((rect.max_y - oy) / dy);
    } else if dy < T::zero() {
        t = t.min((rect.min_y - oy) / dy);
    }
    t.max(T::zero())
}

/// First non-negative hit of the ray with the circle outline, if any.
pub fn ray_circle_hit<T: Scalar>(ox: T, oy: T, dx: T, dy: T, circle: &Circle<T>) -> Option<T> {
    let px = ox - circle.cx;
    let py = oy - circle.cy;
    let b = px * dx + py * dy;
    let cc = px * px + py * py - circle.r * circle.r;
    let disc = b * b - cc;
    if disc < T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    let near = -b - sq;
    if near >= T::zero() {
        return Some(near);
    }
    let far = -b + sq;
    if far >= T::zero() {
        Some(far)
    } else {
        None
    }
}

/// Range returned by one beam: nearest wall or riser along `angle`, capped at `max_range`.
pub fn cast_beam<T: Scalar>(
    ox: T,
    oy: T,
    angle: T,
    rect: &Rect<T>,
    circles: &[Circle<T>],
    max_range: T,
) -> T {
    let (dy, dx) = angle.sin_cos();
    let mut t = ray_rect_exit(ox, oy, dx, dy, rect);
    for circle in circles {
        if let Some(hit) = ray_circle_hit(ox, oy, dx, dy, circle) {
            t = t.min(hit);
        }
    }
    t.min(max_range)
}

/// Angular offset of beam `k` out of `n` relative to the heading, centered on it.
#[inline]
pub fn beam_offset<T: Scalar>(k: usize, n: usize, spacing: T) -> T {
    let center = T::from_usize(n - 1).unwrap() * T::half();
    (T::from_usize(k).unwrap() - center) * spacing
}

/// Casts `out.len()` beams spread symmetrically about `yaw`.
pub fn cast_fan<T: Scalar>(
    ox: T,
    oy: T,
    yaw: T,
    spacing: T,
    rect: &Rect<T>,
    circles: &[Circle<T>],
    max_range: T,
    out: &mut [T],
) {
    let n = out.len();
    for (k, slot) in out.iter_mut().enumerate() {
        let angle = yaw + beam_offset(k, n, spacing);
        *slot = cast_beam(ox, oy, angle, rect, circles, max_range);
    }
}
