use std::io::Write;

use nonconv::bounds::BoundReport;
use nonconv::config::{Config, Experiment};
use nonconv::experiments::{depth_sweep_experiment, init_frequencies, nonconvergence_frequency, TrainSummary};

use crate::output::{csv_bytes, init_rows, json_bytes, Artifacts, BoundRow, SweepCsvRow, TrialRow};
use crate::svg::{Chart, Series};
use crate::{Common, Failure};

/// Traces drawn in the risk plot.
const MAX_TRACES: usize = 50;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn load(c: &Common) -> Result<Experiment, Failure> {
    let mut config = Config::load(&c.config)?;
    config.apply_env_seed()?;
    if let Some(seed) = c.seed {
        config.training.seed = seed;
    }
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        config.training.threads = Some(t);
    }
    if let Some(n) = c.trials {
        if n == 0 {
            return Err(Failure::Config("--trials must be at least 1".into()));
        }
        config.training.trials = n;
        if let Some(s) = config.sweep.as_mut() {
            s.trials = n;
        }
    }
    Ok(Experiment::from_config(config)?)
}

pub fn bound(c: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let exp = load(c)?;
    let report = BoundReport::build(exp.act.name(), &exp.init, &exp.bound_inputs)?;
    Artifacts {
        stem: "bound",
        csv: csv_bytes(&[BoundRow::from(&report)])?,
        json: json_bytes(&report)?,
        svg: None,
    }
    .emit(c.out_dir.as_deref(), c.format, c.plot, out)
}

pub fn mc_init(c: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let exp = load(c)?;
    let t = &exp.config.training;
    let f = init_frequencies(&exp, t.trials, t.seed, t.threads)?;
    let chart = Chart {
        title: format!("inactive layers at initialization ({} trials)", f.n_trials),
        x_label: "layer".into(),
        y_label: "frequency".into(),
        series: vec![Series {
            label: "certified inactive".into(),
            color: PALETTE[0],
            points: f
                .layer_freq
                .iter()
                .enumerate()
                .map(|(i, &p)| ((i + 1) as f64, p))
                .collect(),
            dashed: false,
        }],
        y_range: Some((0.0, 1.0)),
    };
    Artifacts {
        stem: "mc_init",
        csv: csv_bytes(&init_rows(&f))?,
        json: json_bytes(&f)?,
        svg: Some(chart.render()),
    }
    .emit(c.out_dir.as_deref(), c.format, c.plot, out)
}

pub fn train(c: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let exp = load(c)?;
    let t = &exp.config.training;
    let (report, records) = nonconvergence_frequency(&exp, t.trials, t.seed, t.threads)?;
    let rows: Vec<TrialRow> = records.iter().map(TrialRow::from).collect();
    let summary = TrainSummary::new(report, &records)?;
    let series = records
        .iter()
        .take(MAX_TRACES)
        .enumerate()
        .map(|(i, r)| Series {
            label: if i < 6 {
                format!("trial {}", r.trial)
            } else {
                String::new()
            },
            color: PALETTE[i % PALETTE.len()],
            points: r
                .logged_steps
                .iter()
                .zip(&r.risk_trace)
                .map(|(&n, &v)| (n as f64, v))
                .collect(),
            dashed: false,
        })
        .collect();
    let chart = Chart {
        title: format!("risk traces ({})", exp.config.optimizer.method.name()),
        x_label: "step".into(),
        y_label: "risk".into(),
        series,
        y_range: None,
    };
    Artifacts {
        stem: "train",
        csv: csv_bytes(&rows)?,
        json: json_bytes(&summary)?,
        svg: Some(chart.render()),
    }
    .emit(c.out_dir.as_deref(), c.format, c.plot, out)
}

pub fn sweep(c: &Common, out: &mut dyn Write) -> Result<(), Failure> {
    let exp = load(c)?;
    let s = exp
        .config
        .sweep
        .clone()
        .ok_or_else(|| Failure::Config("sweep needs a [sweep] section".into()))?;
    let t = &exp.config.training;
    let table = depth_sweep_experiment(&exp, s.width, &s.depths, s.trials, s.train_trials, t.seed, t.threads)?;
    let rows: Vec<SweepCsvRow> = table.rows.iter().map(SweepCsvRow::from).collect();
    let pts =
        |f: fn(&nonconv::experiments::SweepRow) -> f64| table.rows.iter().map(|r| (r.depth as f64, f(r))).collect();
    let chart = Chart {
        title: format!("dead-at-init frequency, width {}", s.width),
        x_label: "depth".into(),
        y_label: "probability".into(),
        series: vec![
            Series {
                label: "witness frequency".into(),
                color: PALETTE[0],
                points: pts(|r| r.witness_freq),
                dashed: false,
            },
            Series {
                label: "certified frequency".into(),
                color: PALETTE[2],
                points: pts(|r| r.dead_freq),
                dashed: false,
            },
            Series {
                label: "analytic bound".into(),
                color: PALETTE[1],
                points: pts(|r| r.deep_bound),
                dashed: true,
            },
        ],
        y_range: Some((0.0, 1.0)),
    };
    Artifacts {
        stem: "sweep",
        csv: csv_bytes(&rows)?,
        json: json_bytes(&table)?,
        svg: Some(chart.render()),
    }
    .emit(c.out_dir.as_deref(), c.format, c.plot, out)
}
