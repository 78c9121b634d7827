use maskprop::pipeline::{run_scenario, RunConfig, Toggles};
use maskprop::simulator::scenario_suite;
use rayon::prelude::*;

#[test]
fn every_toggle_combination_runs_the_suite() {
    let combos = Toggles::all();
    assert_eq!(combos.len(), 16);
    let suite = scenario_suite();
    for segmenter in ["oracle", "matcher"] {
        let failures: Vec<String> = combos
            .par_iter()
            .flat_map(|&t| {
                let cfg = RunConfig {
                    segmenter: segmenter.into(),
                    ..RunConfig::default()
                }
                .with_toggles(t);
                suite
                    .iter()
                    .filter_map(|s| match run_scenario(s, &cfg) {
                        Ok(out) if out.outputs.len() == s.num_frames => None,
                        Ok(out) => Some(format!("{segmenter} {} {}: {} outputs", t.label(), s.name, out.outputs.len())),
                        Err(e) => Some(format!("{segmenter} {} {}: {e}", t.label(), s.name)),
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        assert!(failures.is_empty(), "{failures:#?}");
    }
}

#[test]
fn baseline_oracle_is_accurate_without_occlusion() {
    for seed in 0..5 {
        let cfg = RunConfig { seed, ..RunConfig::default() }.with_toggles(Toggles::BASELINE);
        for s in scenario_suite().iter().filter(|s| s.occlusions.is_empty()) {
            let report = run_scenario(s, &cfg).unwrap().report.unwrap();
            for m in &report.per_frame {
                assert!(m.j >= 0.9, "{} seed {seed} frame {}: J {}", s.name, m.frame_index, m.j);
            }
        }
    }
}

#[test]
fn seeds_change_oracle_noise_but_not_reruns() {
    let s = &scenario_suite()[0];
    let run = |seed| {
        let cfg = RunConfig { seed, ..RunConfig::default() };
        run_scenario(s, &cfg).unwrap().outputs.into_iter().map(|o| o.mask).collect::<Vec<_>>()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}
