use irs_core::channel::{draw_realization, seeded_rng, ScenarioConfig};
use irs_core::schemes::{run_baseline1, SchemeKind, SchemeParams};
use irs_core::system::SystemParams;
use irs_experiment::plot::read_series;
use irs_experiment::sweep::CSV_HEADER;
use irs_experiment::{plot_svg, render_svg, run_sweep, write_csv, write_csv_to, ExperimentConfig, SweepSpec, SweepTable, SweepVariable};

fn tiny_spec(schemes: Vec<SchemeKind>, trials: usize) -> SweepSpec {
    SweepSpec {
        variable: SweepVariable::DistanceD,
        values: vec![10.0, 40.0],
        schemes,
        trials,
        base: ScenarioConfig { antennas: 2, elements: 4, bits: 1, seed: 12, ..Default::default() },
        output_path: None,
        timing: false,
    }
}

fn csv_bytes(table: &SweepTable) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv_to(table, &mut buf).unwrap();
    buf
}

#[test]
fn csv_round_trips_through_the_plot_reader() {
    let table = run_sweep(&tiny_spec(vec![SchemeKind::Baseline1, SchemeKind::Baseline2], 2), &SchemeParams::default(), 1);
    assert_eq!(table.rows.len(), 4);
    let text = String::from_utf8(csv_bytes(&table)).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let (variable, series) = read_series(&text).unwrap();
    assert_eq!(variable, "distance_d");
    assert_eq!(series.len(), 2);
    assert_eq!(series[0].scheme, "baseline1");
    for s in &series {
        let kind = SchemeKind::parse(&s.scheme).unwrap();
        for (value, mean) in &s.points {
            let row = table.row(*value, kind).unwrap();
            assert!((mean - row.mean_rate).abs() <= 1e-5 * row.mean_rate.abs());
        }
    }
}

#[test]
fn baseline1_does_not_depend_on_irs_position() {
    let spec = tiny_spec(vec![SchemeKind::Baseline1], 1);
    let rate = |d: f64| {
        let cfg = spec.variable.apply(&spec.base, d);
        let (_, ch) = draw_realization::<f64, _>(&cfg, &mut seeded_rng(cfg.seed, 5)).unwrap();
        run_baseline1(&ch, &SystemParams::from_config(&cfg), &SchemeParams::default()).unwrap().sum_rate
    };
    assert_eq!(rate(10.0), rate(40.0));
}

#[test]
fn empty_table_writes_only_the_header() {
    let table = SweepTable { variable: SweepVariable::NumElementsN, rows: Vec::new(), failures: Vec::new() };
    assert_eq!(String::from_utf8(csv_bytes(&table)).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let spec = tiny_spec(vec![SchemeKind::Proposed, SchemeKind::Baseline1], 2);
    let params = SchemeParams::default();
    assert_eq!(csv_bytes(&run_sweep(&spec, &params, 1)), csv_bytes(&run_sweep(&spec, &params, 3)));
}

#[test]
fn svg_has_one_polyline_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let svg = dir.path().join("sweep.svg");
    let table = run_sweep(
        &tiny_spec(vec![SchemeKind::Baseline1, SchemeKind::UpperBound, SchemeKind::UpperBoundContinuous], 1),
        &SchemeParams::default(),
        1,
    );
    write_csv(&table, &csv).unwrap();
    plot_svg(&csv, &svg).unwrap();
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 3);
    assert!(text.contains("<title>upper_bound_continuous</title>"));
    assert!(text.contains("Average sum-rate (bits/s/Hz)"));
    assert_eq!(text.matches("<svg").count(), text.matches("</svg>").count());
}

#[test]
fn svg_escapes_markup_in_names() {
    let series = vec![irs_experiment::plot::Series { scheme: "a<b&c".into(), points: vec![(1.0, 2.0), (2.0, 3.0)] }];
    let svg = render_svg("custom", &series);
    assert!(svg.contains("a&lt;b&amp;c"));
    assert!(!svg.contains("a<b"));
}

#[test]
fn config_file_drives_the_sweep() {
    let text = "\
# desk run
seed = 7
ap.antennas = 2
irs.elements = 4
irs.b = 1
sweep.variable = num_elements_N
sweep.values = 2, 4
sweep.schemes = baseline1
sweep.trials = 1
";
    let cfg = ExperimentConfig::parse(text).unwrap();
    assert_eq!(cfg.sweep.variable, SweepVariable::NumElementsN);
    assert_eq!(cfg.sweep.base.seed, 7);
    let table = run_sweep(&cfg.sweep, &cfg.schemes, 1);
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows.iter().all(|r| r.failures == 0 && r.mean_seconds == 0.0));
}

#[test]
fn config_errors_name_the_line() {
    let err = ExperimentConfig::parse("seed = 1\nirs.b = three\n").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    assert!(ExperimentConfig::parse("bogus.key = 1\n").is_err());
    assert!(ExperimentConfig::parse("ap.antennas = 1\n").is_err());
}
