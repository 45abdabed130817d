// SPDX-License-Identifier: Apache-2.0

//! Tape gradients through the whole classifier against central differences.

use ndarray::Array2;
use oen_quant::model::{MatmulPolicy, ModelSpec, ToyModel};
use oen_quant::tape::Tape;

fn loss(model: &ToyModel, x: &Array2<f64>, label: usize) -> f64 {
    let mut t = Tape::new();
    let (_, logits) = model
        .forward(&mut t, x, &MatmulPolicy::exact().ctx(0))
        .unwrap();
    let l = t.cross_entropy(logits, label);
    t.value(l)[[0, 0]]
}

#[test]
fn model_gradients_match_finite_differences() {
    let spec = ModelSpec {
        embed_dim: 8,
        heads: 2,
        layers: 2,
        ff_mult: 2,
    };
    let model = ToyModel::init(spec, 5, 4, 3, 7).unwrap();
    let x = Array2::from_shape_fn((4, 5), |(i, j)| ((i * 5 + j) as f64 * 0.53).sin());
    let label = 2;

    let mut t = Tape::new();
    let (params, logits) = model
        .forward(&mut t, &x, &MatmulPolicy::exact().ctx(0))
        .unwrap();
    let l = t.cross_entropy(logits, label);
    let grads = t.backward(l);

    let h = 1e-5;
    let mut checked = 0;
    for (k, p) in params.iter().enumerate() {
        let g = grads[p.index()]
            .as_ref()
            .expect("every parameter reaches the loss");
        // A few entries per tensor keep the test quick.
        for idx in [0usize, g.len() / 2, g.len() - 1] {
            let (r, c) = (idx / g.ncols(), idx % g.ncols());
            let mut plus = model.clone();
            plus.params[k][[r, c]] += h;
            let mut minus = model.clone();
            minus.params[k][[r, c]] -= h;
            let fd = (loss(&plus, &x, label) - loss(&minus, &x, label)) / (2.0 * h);
            let an = g[[r, c]];
            assert!(
                (fd - an).abs() <= 1e-6 + 1e-4 * fd.abs().max(an.abs()),
                "{} [{r},{c}]: analytic {an}, numeric {fd}",
                model.names[k]
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 3 * model.params.len());
}
