//! Monochrome bitmaps, integer line rasterization, exact Euclidean distance
//! transform and the Equal Earth boundary band mask.

use std::io::Write;

use crate::projection::Projector;
use crate::sphere::UnitVec3;

/// Row-major 1-bit image. Bit set = ink.
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    stride: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bitmap({}x{}, {} set)", self.width, self.height, self.count_ones())
    }
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        let stride = width.div_ceil(64);
        Self {
            width,
            height,
            stride,
            words: vec![0; stride * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.words[y * self.stride + x / 64] >> (x % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize) {
        if x < self.width && y < self.height {
            self.words[y * self.stride + x / 64] |= 1 << (x % 64);
        }
    }

    /// Sets a pixel given signed coordinates; off-canvas pixels are dropped.
    #[inline]
    pub fn plot(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 {
            self.set(x as usize, y as usize);
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of pixels set in both bitmaps.
    pub fn count_and(&self, other: &Bitmap) -> u64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// Number of pixels set here and clear in `other`.
    pub fn count_and_not(&self, other: &Bitmap) -> u64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as u64)
            .sum()
    }

    pub fn and(&self, other: &Bitmap) -> Bitmap {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Bitmap {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            ..self.clone()
        }
    }

    pub fn not(&self) -> Bitmap {
        let mut out = Bitmap {
            words: self.words.iter().map(|w| !w).collect(),
            ..self.clone()
        };
        out.mask_padding();
        out
    }

    fn mask_padding(&mut self) {
        let tail = self.width % 64;
        if tail == 0 {
            return;
        }
        let keep = (1u64 << tail) - 1;
        for y in 0..self.height {
            self.words[y * self.stride + self.stride - 1] &= keep;
        }
    }

    /// Bresenham line between integer pixel coordinates, both ends inclusive.
    pub fn draw_line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        let (mut x, mut y) = (x0, y0);
        loop {
            self.plot(x, y);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Draws a polyline given in continuous canvas coordinates; a point maps
    /// to the pixel that contains it.
    pub fn draw_polyline(&mut self, points: impl IntoIterator<Item = (f64, f64)>) {
        let mut prev: Option<(i64, i64)> = None;
        for (x, y) in points {
            let p = pixel_of(x, y);
            match prev {
                Some(q) => self.draw_line(q.0, q.1, p.0, p.1),
                None => self.plot(p.0, p.1),
            }
            prev = Some(p);
        }
    }

    /// Binary PGM (P4): rows padded to whole bytes, most significant bit
    /// first, 1 = black.
    pub fn write_pbm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P4\n{} {}\n", self.width, self.height)?;
        let row_bytes = self.width.div_ceil(8);
        let mut row = vec![0u8; row_bytes];
        for y in 0..self.height {
            row.fill(0);
            for x in 0..self.width {
                if self.get(x, y) {
                    row[x / 8] |= 0x80 >> (x % 8);
                }
            }
            out.write_all(&row)?;
        }
        Ok(())
    }

    pub fn to_pbm_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_pbm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

#[inline]
pub fn pixel_of(x: f64, y: f64) -> (i64, i64) {
    // guard against 149.99999999 landing one pixel short of an exact edge
    ((x + 1e-9).floor() as i64, (y + 1e-9).floor() as i64)
}

/// Squared Euclidean distance from every pixel to the nearest pixel with
/// `feature == true` (Felzenszwalb and Huttenlocher, separable, exact).
/// Pixels are unit squares; distances are between centres.
pub fn squared_distance_transform(width: usize, height: usize, feature: &[bool]) -> Vec<f64> {
    assert_eq!(feature.len(), width * height);
    let inf = 1e20;
    let mut grid: Vec<f64> = feature.iter().map(|&f| if f { 0.0 } else { inf }).collect();
    let mut f = vec![0.0; width.max(height)];
    let mut d = vec![0.0; width.max(height)];
    let mut v = vec![0usize; width.max(height)];
    let mut z = vec![0.0; width.max(height) + 1];
    for x in 0..width {
        for y in 0..height {
            f[y] = grid[y * width + x];
        }
        edt_1d(&f[..height], &mut d[..height], &mut v, &mut z);
        for y in 0..height {
            grid[y * width + x] = d[y];
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(&grid[y * width..(y + 1) * width]);
        edt_1d(&f[..width], &mut d[..width], &mut v, &mut z);
        grid[y * width..(y + 1) * width].copy_from_slice(&d[..width]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates from the start
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
            }
            break;
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Partition of a projection canvas into a boundary band and the deep
/// interior. A pixel is interior when its centre lies inside the projected
/// outline and further than the band width from every outside pixel centre
/// (the canvas margin counts as outside). Everything else is band.
#[derive(Debug, Clone)]
pub struct BoundaryMask {
    interior: Bitmap,
    band: Bitmap,
    band_inside: Bitmap,
    band_width_px: f64,
}

impl BoundaryMask {
    /// `band_pct` is a percentage of the canvas width.
    pub fn new(projector: &Projector, width: usize, height: usize, band_pct: f64) -> Self {
        let band_width_px = band_pct / 100.0 * width as f64;
        // pad one pixel so the canvas edge behaves as outside
        let (pw, ph) = (width + 2, height + 2);
        let mut outside = vec![true; pw * ph];
        let mut inside = Bitmap::new(width, height);
        let sx = projector.spec().canvas_width / width as f64;
        let sy = projector.spec().canvas_height / height as f64;
        for y in 0..height {
            for x in 0..width {
                if projector.contains((x as f64 + 0.5) * sx, (y as f64 + 0.5) * sy) {
                    outside[(y + 1) * pw + x + 1] = false;
                    inside.set(x, y);
                }
            }
        }
        let dist2 = squared_distance_transform(pw, ph, &outside);
        let limit = band_width_px * band_width_px;
        let mut interior = Bitmap::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if dist2[(y + 1) * pw + x + 1] > limit {
                    interior.set(x, y);
                }
            }
        }
        let band = interior.not();
        let band_inside = band.and(&inside);
        Self {
            interior,
            band,
            band_inside,
            band_width_px,
        }
    }

    pub fn band_width_px(&self) -> f64 {
        self.band_width_px
    }

    pub fn interior(&self) -> &Bitmap {
        &self.interior
    }

    pub fn band(&self) -> &Bitmap {
        &self.band
    }

    /// Band pixels whose centres lie inside the projected outline.
    pub fn band_inside(&self) -> &Bitmap {
        &self.band_inside
    }

    pub fn in_band(&self, x: usize, y: usize) -> bool {
        self.band.get(x, y)
    }
}

/// Rasterizes great-circle edges under a projection with 1-px strokes.
/// Antipodal edges are skipped (their arc is undefined).
pub fn rasterize_sphere_edges(
    projector: &Projector,
    positions: &[UnitVec3],
    edges: &[(usize, usize)],
    bitmap: &mut Bitmap,
) {
    let sx = bitmap.width() as f64 / projector.spec().canvas_width;
    let sy = bitmap.height() as f64 / projector.spec().canvas_height;
    for &(a, b) in edges {
        if let Ok(path) = projector.project_geodesic(positions[a], positions[b]) {
            for seg in &path.segments {
                bitmap.draw_polyline(seg.iter().map(|p| (p.x * sx, p.y * sy)));
            }
        }
    }
}
