//! Markov dynamics over the measure-time-changed Cantor flow: a waiting
//! point inside the attractor, kernels, Chapman-Kolmogorov and sampled
//! paths all have to agree there too.

use discflow_core::cantor::CantorGaps;
use discflow_core::kernel::{MarkovProcess, MarkovSpec, WaitingPoint};
use discflow_core::measure::{AtomlessMeasure, IfsComponent};
use discflow_core::regulated::{PieceForm, RegulatedFn};
use discflow_core::{sampler, verify};

fn cantor_process() -> MarkovProcess {
    let f = RegulatedFn::new(
        vec![0.0, 1.0],
        vec![
            PieceForm::Constant(0.0),
            PieceForm::Cantor(CantorGaps::middle_thirds()),
            PieceForm::Constant(0.0),
        ],
        vec![0.0, 0.0],
        1.0,
    )
    .unwrap();
    MarkovProcess::new(MarkovSpec {
        f,
        mu: AtomlessMeasure {
            ac: vec![],
            ifs: vec![IfsComponent::cantor(0.0, 1.0, 1.0)],
        },
        stop_set: vec![],
        waiting: vec![WaitingPoint {
            x: 1.0 / 3.0,
            rate: 1.0,
        }],
        theta: vec![],
    })
    .unwrap()
}

#[test]
fn holding_atom_inside_the_attractor() {
    let proc = cantor_process();
    let k = proc.kernel(1.0 / 3.0, 2.0).unwrap();
    assert!((k.total_mass() - 1.0).abs() < 1e-9, "mass {}", k.total_mass());
    let atom: f64 = k
        .atoms
        .iter()
        .filter(|&&(x, _)| x == 1.0 / 3.0)
        .map(|&(_, m)| m)
        .sum();
    assert!((atom - (-2.0f64).exp()).abs() <= 1e-12, "{atom}");
}

#[test]
fn chapman_kolmogorov_through_the_measure() {
    let proc = cantor_process();
    let sets = [
        (0.0, 0.5),
        (0.34, 0.9),
        (1.0 / 3.0 - 1e-7, 1.0 / 3.0 + 1e-7),
        (0.0, 1.0),
    ];
    let report =
        verify::check_chapman_kolmogorov(&proc, 0.1, 1.0, 1.0, &sets, 1e-4).unwrap();
    assert!(report.pass, "{report}");
}

#[test]
fn sampled_paths_respect_the_time_change() {
    let proc = cantor_process();
    for i in 0..3 {
        let p = sampler::sample_path_indexed(&proc, 0.05, 2.0, 5, i).unwrap();
        assert!(p.is_monotone());
        let r = verify::path_residual(&proc, &p).unwrap();
        assert!(r <= 1e-6, "path {i} residual {r:.2e}");
    }
}
