use super::Plane;

/// Bilinear resize using pixel-center alignment (`align_corners = false`),
/// clamping at the borders.
pub fn resize_bilinear(plane: &Plane, width: usize, height: usize) -> Plane {
    let (sw, sh) = plane.dims();
    if (sw, sh) == (width, height) {
        return plane.clone();
    }
    let fx = sw as f64 / width as f64;
    let fy = sh as f64 / height as f64;
    let src_coord = |dst: usize, f: f64, n: usize| -> (usize, usize, f64) {
        let s = ((dst as f64 + 0.5) * f - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, s - i0 as f64)
    };
    let xs: Vec<_> = (0..width).map(|x| src_coord(x, fx, sw)).collect();
    Plane::from_fn(width, height, |x, y| {
        let (y0, y1, ty) = src_coord(y, fy, sh);
        let (x0, x1, tx) = xs[x];
        let top = plane.get(x0, y0) * (1.0 - tx) + plane.get(x1, y0) * tx;
        let bottom = plane.get(x0, y1) * (1.0 - tx) + plane.get(x1, y1) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// Nearest-neighbor resize with the same pixel-center convention.
pub fn resize_nearest(plane: &Plane, width: usize, height: usize) -> Plane {
    let (sw, sh) = plane.dims();
    if (sw, sh) == (width, height) {
        return plane.clone();
    }
    let fx = sw as f64 / width as f64;
    let fy = sh as f64 / height as f64;
    Plane::from_fn(width, height, |x, y| {
        let sx = (((x as f64 + 0.5) * fx).floor() as usize).min(sw - 1);
        let sy = (((y as f64 + 0.5) * fy).floor() as usize).min(sh - 1);
        plane.get(sx, sy)
    })
}
