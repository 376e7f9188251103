use crate::scene::Frame;
use crate::Scalar;

use super::PipelineError;

/// Reduced `w x w` gray image with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    pub t: f64,
    pub w: usize,
    pub pixels: Vec<T>,
}

/// Start offsets of `parts` near-equal integer bins over `len`; bin `i` is
/// `[edges[i], edges[i + 1])`.
fn bin_edges(len: usize, parts: usize) -> Vec<usize> {
    (0..=parts).map(|i| i * len / parts).collect()
}

/// Channel-mean grayscale followed by area averaging onto a `w x w` grid.
pub fn to_gray<T: Scalar>(frame: &Frame, w: usize) -> Result<GrayImage<T>, PipelineError> {
    let (width, height) = (frame.width as usize, frame.height as usize);
    if w == 0 || w > width || w > height {
        return Err(PipelineError::ImageTooSmall {
            w,
            width: frame.width,
            height: frame.height,
        });
    }
    let col_edges = bin_edges(width, w);
    let row_edges = bin_edges(height, w);
    let mut col_bin = vec![0usize; width];
    for b in 0..w {
        col_bin[col_edges[b]..col_edges[b + 1]].fill(b);
    }

    let mut sums = vec![0u64; w * w];
    let mut row_acc = vec![0u32; w];
    for rb in 0..w {
        for row in row_edges[rb]..row_edges[rb + 1] {
            let line = &frame.pixels[3 * row * width..3 * (row + 1) * width];
            for (px, &b) in line.chunks_exact(3).zip(&col_bin) {
                row_acc[b] += px[0] as u32 + px[1] as u32 + px[2] as u32;
            }
            for (s, a) in sums[rb * w..(rb + 1) * w].iter_mut().zip(row_acc.iter_mut()) {
                *s += *a as u64;
                *a = 0;
            }
        }
    }

    let mut pixels = Vec::with_capacity(w * w);
    for rb in 0..w {
        let rows = (row_edges[rb + 1] - row_edges[rb]) as f64;
        for cb in 0..w {
            let cols = (col_edges[cb + 1] - col_edges[cb]) as f64;
            let mean = sums[rb * w + cb] as f64 / (3.0 * 255.0 * rows * cols);
            pixels.push(T::from_f64_lossy(mean));
        }
    }
    Ok(GrayImage { t: frame.t, w, pixels })
}
