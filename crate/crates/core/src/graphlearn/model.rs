use rand::Rng;
use serde_json::{json, Value};

use crate::data::{dim, FlatParams, FlatReader, FormatError, GraphDims, LabelKind};
use crate::rng::stream_rng;

/// Weights of one gated message-passing layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `h x h`, row-major.
    pub w_self: Vec<f64>,
    /// `h x h`, row-major.
    pub w_nbr: Vec<f64>,
    /// Edge gate weights, length `p`.
    pub gate_u: Vec<f64>,
    pub gate_c: f64,
    pub bias: Vec<f64>,
}

/// Parameters of the gated mean-aggregation message-passing network.
///
/// Flat order (checkpoint layout): `w_in` (h x m), `b_in` (h), then per layer
/// `w_self` (h x h), `w_nbr` (h x h), `gate_u` (p), `gate_c`, `bias` (h),
/// then `w_out` (M x h), `b_out` (M), `w_node` (h), `b_node`, `bilinear`
/// (h x h). All matrices row-major. Total length:
/// `h*m + h + L*(2h^2 + p + 1 + h) + M*h + M + h + 1 + h^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphModelParams {
    pub m: usize,
    pub p: usize,
    pub hidden: usize,
    pub label_kinds: Vec<LabelKind>,
    pub w_in: Vec<f64>,
    pub b_in: Vec<f64>,
    pub layers: Vec<LayerParams>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
    pub w_node: Vec<f64>,
    pub b_node: f64,
    pub bilinear: Vec<f64>,
}

/// Closed-form parameter count for the layout documented on [`GraphModelParams`].
pub fn param_count(m: usize, p: usize, labels: usize, layers: usize, h: usize) -> usize {
    h * m + h + layers * (2 * h * h + p + 1 + h) + labels * h + labels + h + 1 + h * h
}

fn uniform(rng: &mut impl Rng, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-s..s)).collect()
}

/// Glorot-uniform initialization, biases zero.
///
/// Draw order on stream 0 of `seed`: `w_in`, then per layer `w_self`,
/// `w_nbr`, `gate_u`, then `w_out`, `w_node`, `bilinear`.
pub fn init_model(dims: &GraphDims, layers: usize, hidden: usize, seed: u64) -> GraphModelParams {
    let (m, p, big_m, h) = (dims.m, dims.p, dims.labels(), hidden);
    let mut rng = stream_rng(seed, 0);
    let w_in = uniform(&mut rng, h * m, m, h);
    let layers = (0..layers)
        .map(|_| LayerParams {
            w_self: uniform(&mut rng, h * h, h, h),
            w_nbr: uniform(&mut rng, h * h, h, h),
            gate_u: uniform(&mut rng, p, p, 1),
            gate_c: 0.0,
            bias: vec![0.0; h],
        })
        .collect();
    let w_out = uniform(&mut rng, big_m * h, h, big_m);
    let w_node = uniform(&mut rng, h, h, 1);
    let bilinear = uniform(&mut rng, h * h, h, h);
    GraphModelParams {
        m,
        p,
        hidden: h,
        label_kinds: dims.label_kinds.clone(),
        w_in,
        b_in: vec![0.0; h],
        layers,
        w_out,
        b_out: vec![0.0; big_m],
        w_node,
        b_node: 0.0,
        bilinear,
    }
}

impl GraphModelParams {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn labels(&self) -> usize {
        self.label_kinds.len()
    }

    pub fn dims(&self) -> GraphDims {
        GraphDims::new(self.m, self.p, self.label_kinds.clone())
    }

    /// Same shape, every value zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.slices_mut().into_iter().for_each(|s| s.fill(0.0));
        z
    }

    pub fn param_count(&self) -> usize {
        param_count(self.m, self.p, self.labels(), self.num_layers(), self.hidden)
    }

    /// Every parameter tensor in checkpoint order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.w_in, &self.b_in];
        for l in &self.layers {
            out.push(&l.w_self);
            out.push(&l.w_nbr);
            out.push(&l.gate_u);
            out.push(std::slice::from_ref(&l.gate_c));
            out.push(&l.bias);
        }
        out.push(&self.w_out);
        out.push(&self.b_out);
        out.push(&self.w_node);
        out.push(std::slice::from_ref(&self.b_node));
        out.push(&self.bilinear);
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.w_in, &mut self.b_in];
        for l in &mut self.layers {
            out.push(&mut l.w_self);
            out.push(&mut l.w_nbr);
            out.push(&mut l.gate_u);
            out.push(std::slice::from_mut(&mut l.gate_c));
            out.push(&mut l.bias);
        }
        out.push(&mut self.w_out);
        out.push(&mut self.b_out);
        out.push(&mut self.w_node);
        out.push(std::slice::from_mut(&mut self.b_node));
        out.push(&mut self.bilinear);
        out
    }

    /// Names of the tensors returned by [`slices`](Self::slices).
    pub fn slice_names(&self) -> Vec<String> {
        let mut out = vec!["w_in".to_string(), "b_in".into()];
        for l in 0..self.layers.len() {
            for name in ["w_self", "w_nbr", "gate_u", "gate_c", "bias"] {
                out.push(format!("layer{l}.{name}"));
            }
        }
        out.extend(["w_out", "b_out", "w_node", "b_node", "bilinear"].map(String::from));
        out
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &Self, alpha: f64) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[pos..pos + s.len()]);
            pos += s.len();
        }
    }
}

impl FlatParams for GraphModelParams {
    const MODEL_KIND: &'static str = "graph_message_passing";

    fn dims_json(&self) -> Value {
        json!({
            "m": self.m,
            "p": self.p,
            "label_kinds": self.label_kinds,
            "layers": self.num_layers(),
            "hidden": self.hidden,
        })
    }

    fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    fn from_flat(dims: &Value, flat: &[f64]) -> Result<Self, FormatError> {
        let (m, p, layers, h) = (dim(dims, "m")?, dim(dims, "p")?, dim(dims, "layers")?, dim(dims, "hidden")?);
        let label_kinds: Vec<LabelKind> = serde_json::from_value(dims.get("label_kinds").cloned().unwrap_or_default())
            .map_err(|e| FormatError::Invalid(format!("label_kinds: {e}")))?;
        let big_m = label_kinds.len();
        let mut r = FlatReader::new(flat);
        let w_in = r.take(h * m)?;
        let b_in = r.take(h)?;
        let mut ls = Vec::with_capacity(layers);
        for _ in 0..layers {
            ls.push(LayerParams {
                w_self: r.take(h * h)?,
                w_nbr: r.take(h * h)?,
                gate_u: r.take(p)?,
                gate_c: r.scalar()?,
                bias: r.take(h)?,
            });
        }
        let params = GraphModelParams {
            m,
            p,
            hidden: h,
            label_kinds,
            w_in,
            b_in,
            layers: ls,
            w_out: r.take(big_m * h)?,
            b_out: r.take(big_m)?,
            w_node: r.take(h)?,
            b_node: r.scalar()?,
            bilinear: r.take(h * h)?,
        };
        r.finish()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> GraphDims {
        GraphDims::new(4, 4, vec![LabelKind::Binary, LabelKind::Real])
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model(&dims(), 2, 16, 5);
        assert_eq!(a, init_model(&dims(), 2, 16, 5));
        assert_ne!(a, init_model(&dims(), 2, 16, 6));
        let bound = |fi: usize, fo: usize| (6.0 / (fi + fo) as f64).sqrt();
        assert!(a.w_in.iter().all(|w| w.abs() <= bound(4, 16)));
        for l in &a.layers {
            assert!(l.w_self.iter().chain(&l.w_nbr).all(|w| w.abs() <= bound(16, 16)));
            assert!(l.gate_u.iter().all(|w| w.abs() <= bound(4, 1)));
            assert!(l.bias.iter().all(|&b| b == 0.0) && l.gate_c == 0.0);
        }
        assert!(a.w_out.iter().all(|w| w.abs() <= bound(16, 2)));
        assert!(a.w_node.iter().all(|w| w.abs() <= bound(16, 1)));
        assert!(a.bilinear.iter().all(|w| w.abs() <= bound(16, 16)));
    }

    #[test]
    fn count_matches_hand_formula_for_unit_sizes() {
        // h = 1, m = 1, p = 4, M = 2, L = 2:
        // w_in 1 + b_in 1 + 2 layers * (1 + 1 + 4 + 1 + 1) + w_out 2 + b_out 2
        // + w_node 1 + b_node 1 + bilinear 1 = 25
        let d = GraphDims::new(1, 4, vec![LabelKind::Binary, LabelKind::Real]);
        let p = init_model(&d, 2, 1, 0);
        assert_eq!(p.param_count(), 25);
        assert_eq!(p.to_flat().len(), 25);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let p = init_model(&dims(), 2, 3, 1);
        let ck = p.to_checkpoint();
        let back = GraphModelParams::from_checkpoint(&Checkpoint::from_json(&ck.to_json().unwrap()).unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(p.slice_names().len(), p.slices().len());
    }

    use crate::data::Checkpoint;
}
