//! Fixtures shared by the benchmark suite: synthetic populations sized
//! for steady-state measurement rather than statistical studies.

use micg_core::coding::DeprivationMatrix;
use micg_core::synth::{frontier_sample, generate, FrontierSample, FrontierTruth, GeneratorSpec};
use micg_core::{code_deprivations, ChildDataset, IndicatorCatalog, MissingPolicy};

pub fn population(n: usize) -> (IndicatorCatalog, ChildDataset) {
    let catalog = micg_core::reference_catalog();
    let spec = GeneratorSpec {
        n,
        rho: 0.35,
        sex_effect: 0.3,
        area_effect: 0.45,
        seed: 42,
        ..GeneratorSpec::default()
    };
    let synth = generate(&catalog, &spec).expect("generator fixture");
    (catalog, synth.dataset)
}

pub fn coded(n: usize) -> (IndicatorCatalog, DeprivationMatrix) {
    let (catalog, dataset) = population(n);
    let matrix = code_deprivations(&dataset, &catalog, MissingPolicy::TreatNondeprived)
        .expect("coding fixture");
    (catalog, matrix)
}

pub fn frontier_fixture(n: usize) -> FrontierSample {
    let truth = FrontierTruth {
        beta: vec![1.0, -0.4, -0.3],
        sigma_v: 0.15,
        lambda: 2.0,
    };
    frontier_sample(&truth, n, 42).expect("frontier fixture")
}
