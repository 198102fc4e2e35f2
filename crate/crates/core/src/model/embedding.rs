use crate::error::{Error, Result};

/// Maximum deviation of a row norm from 1 for a sequence flagged as normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Per-frame semantic embeddings, `frame_count` rows of `dim` components.
///
/// Values are held in `f64` regardless of how they were stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    frame_count: usize,
    dim: usize,
    data: Vec<f64>,
    fps: Option<f64>,
    source_tag: String,
    normalized: bool,
}

impl EmbeddingSequence {
    /// Builds an unnormalized sequence from a row-major buffer.
    pub fn from_flat(
        frame_count: usize,
        dim: usize,
        data: Vec<f64>,
        fps: Option<f64>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        if frame_count < 2 {
            return Err(Error::domain(format!(
                "an embedding sequence needs at least 2 frames, got {frame_count}"
            )));
        }
        if dim < 1 {
            return Err(Error::domain("embedding dimension must be at least 1"));
        }
        if data.len() != frame_count * dim {
            return Err(Error::domain(format!(
                "expected {} values for {frame_count}x{dim} embeddings, got {}",
                frame_count * dim,
                data.len()
            )));
        }
        if let Some(fps) = fps {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(Error::domain(format!("fps must be positive, got {fps}")));
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite embedding component in row {}",
                pos / dim
            )));
        }
        let seq = EmbeddingSequence {
            frame_count,
            dim,
            data,
            fps,
            source_tag: source_tag.into(),
            normalized: false,
        };
        if let Some(i) = seq.rows().position(|row| row.iter().all(|&v| v == 0.0)) {
            return Err(Error::domain(format!("row {i} is the zero vector")));
        }
        Ok(seq)
    }

    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        fps: Option<f64>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        let frame_count = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::domain("embedding rows have inconsistent lengths"));
        }
        let data = rows.into_iter().flatten().collect();
        Self::from_flat(frame_count, dim, data, fps, source_tag)
    }

    /// Sets the normalized flag after checking every row is unit length.
    pub fn assume_normalized(mut self) -> Result<Self> {
        for (i, row) in self.rows().enumerate() {
            let norm = row_norm(row);
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::domain(format!(
                    "row {i} has norm {norm}, expected unit length"
                )));
            }
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Replaces the payload with already-normalized rows.
    pub(crate) fn with_normalized_data(&self, data: Vec<f64>) -> Self {
        EmbeddingSequence {
            data,
            normalized: true,
            source_tag: self.source_tag.clone(),
            ..*self
        }
    }
}

pub(crate) fn row_norm(row: &[f64]) -> f64 {
    row.iter().map(|v| v * v).sum::<f64>().sqrt()
}
