use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `out += self · x`
    pub(crate) fn mul_vec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `out += selfᵀ · y`
    pub(crate) fn mul_t_vec_add(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (&yr, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            if yr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += yr * a;
            }
        }
    }

    /// `self += y ⊗ x`
    pub(crate) fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (&yr, row) in y.iter().zip(self.data.chunks_exact_mut(self.cols)) {
            if yr == 0.0 {
                continue;
            }
            for (a, b) in row.iter_mut().zip(x) {
                *a += yr * b;
            }
        }
    }
}

/// One LSTM layer. Gate blocks of `w`, `u` and `b` are ordered input, forget,
/// cell candidate, output; each block has `hidden_dim` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub w: Matrix,
    pub u: Matrix,
    pub b: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w: Matrix::zeros(4 * hidden_dim, input_dim),
            u: Matrix::zeros(4 * hidden_dim, hidden_dim),
            b: vec![0.0; 4 * hidden_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_dim();
        if h == 0 || self.input_dim() == 0 {
            return Err(Error::Dimension("LSTM dimensions must be positive".into()));
        }
        if self.w.rows() != 4 * h || self.u.rows() != 4 * h || self.b.len() != 4 * h {
            return Err(Error::Dimension(format!(
                "LSTM layer with hidden_dim {h} needs {} gate rows",
                4 * h
            )));
        }
        Ok(())
    }
}

/// Every trainable tensor of the classifier. Also used for gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub embedding: Matrix,
    pub layers: Vec<LstmLayerParams>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

pub type Gradients = Parameters;

impl Parameters {
    pub fn zeros(vocab_size: usize, embed_dim: usize, hidden_dim: usize, num_layers: usize) -> Self {
        let layers = (0..num_layers)
            .map(|l| LstmLayerParams::zeros(if l == 0 { embed_dim } else { hidden_dim }, hidden_dim))
            .collect();
        Self {
            embedding: Matrix::zeros(vocab_size, embed_dim),
            layers,
            head_w: vec![0.0; hidden_dim],
            head_b: 0.0,
        }
    }

    pub fn zeros_like(other: &Parameters) -> Self {
        Self::zeros(
            other.embedding.rows(),
            other.embedding.cols(),
            other.head_w.len(),
            other.layers.len(),
        )
    }

    /// Tensors in the canonical order: embedding, then per layer `w`, `u`, `b`,
    /// then `head_w`, `head_b`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.embedding.as_slice()];
        for layer in &self.layers {
            out.push(layer.w.as_slice());
            out.push(layer.u.as_slice());
            out.push(&layer.b);
        }
        out.push(&self.head_w);
        out.push(std::slice::from_ref(&self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embedding.as_mut_slice()];
        for layer in &mut self.layers {
            out.push(layer.w.as_mut_slice());
            out.push(layer.u.as_mut_slice());
            out.push(&mut layer.b);
        }
        out.push(&mut self.head_w);
        out.push(std::slice::from_mut(&mut self.head_b));
        out
    }

    pub fn shapes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &Parameters) -> Result<()> {
        if self.shapes() != other.shapes() {
            return Err(Error::Dimension("parameter shapes differ".into()));
        }
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Sequence classifier. The version counter changes on every parameter mutation
/// so backward passes can reject tapes recorded against older weights.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    params: Parameters,
    version: u64,
}

impl PartialEq for ClassifierModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

impl ClassifierModel {
    pub fn from_parameters(params: Parameters) -> Result<Self> {
        let vocab = params.embedding.rows();
        let embed = params.embedding.cols();
        let hidden = params.head_w.len();
        if vocab == 0 || embed == 0 || hidden == 0 {
            return Err(Error::Dimension("model dimensions must be positive".into()));
        }
        if !(1..=2).contains(&params.layers.len()) {
            return Err(Error::Dimension(format!(
                "num_layers must be 1 or 2, got {}",
                params.layers.len()
            )));
        }
        for (l, layer) in params.layers.iter().enumerate() {
            layer.validate()?;
            let want_in = if l == 0 { embed } else { hidden };
            if layer.input_dim() != want_in || layer.hidden_dim() != hidden {
                return Err(Error::Dimension(format!(
                    "layer {l} is {}→{}, expected {want_in}→{hidden}",
                    layer.input_dim(),
                    layer.hidden_dim()
                )));
            }
        }
        if !params.all_finite() {
            return Err(Error::Dimension("parameters contain non-finite values".into()));
        }
        Ok(Self { params, version: 0 })
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters {
        self.version = self.version.wrapping_add(1);
        &mut self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn vocab_size(&self) -> usize {
        self.params.embedding.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.params.embedding.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.params.head_w.len()
    }

    pub fn num_layers(&self) -> usize {
        self.params.layers.len()
    }

    /// Copy with every parameter rounded through `f32`, i.e. what a checkpoint stores.
    pub fn rounded_to_f32(&self) -> Self {
        let mut params = self.params.clone();
        for t in params.tensors_mut() {
            t.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
        Self { params, version: 0 }
    }
}

/// Fresh model: embedding, `w` and `u` uniform in `±1/sqrt(fan_in)` (fan-in is
/// `embed_dim` for the embedding, the layer input width for `w`, `hidden_dim`
/// for `u`), drawn in canonical tensor order from one seeded stream. Biases are
/// zero except the forget block, which starts at 1. The head starts at zero.
pub fn init_model(
    vocab_size: usize,
    embed_dim: usize,
    hidden_dim: usize,
    num_layers: usize,
    seed: u64,
) -> Result<ClassifierModel> {
    if vocab_size == 0 || embed_dim == 0 || hidden_dim == 0 {
        return Err(Error::Dimension("model dimensions must be positive".into()));
    }
    if !(1..=2).contains(&num_layers) {
        return Err(Error::Dimension(format!("num_layers must be 1 or 2, got {num_layers}")));
    }
    let mut params = Parameters::zeros(vocab_size, embed_dim, hidden_dim, num_layers);
    let mut rng = SeededRng::new(seed);
    let mut fill = |m: &mut Matrix, fan_in: usize| {
        let k = 1.0 / (fan_in as f64).sqrt();
        m.as_mut_slice().iter_mut().for_each(|v| *v = rng.symmetric(k));
    };
    fill(&mut params.embedding, embed_dim);
    for layer in &mut params.layers {
        let input_dim = layer.input_dim();
        fill(&mut layer.w, input_dim);
        fill(&mut layer.u, hidden_dim);
        layer.b[hidden_dim..2 * hidden_dim].fill(1.0);
    }
    ClassifierModel::from_parameters(params)
}
