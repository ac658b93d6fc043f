//! Candidate controls read from CSV: a `t` column followed by any of
//! `Theta_i_j`, `ThetaBar_i_j` (gains on the fluctuation and on the mean)
//! and `v_i` (deterministic offset). Missing groups are zero; values are
//! interpolated linearly between rows.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mflq::model::GameSpec;
use mflq::synthesis::{ControlLaw, Gains, OffsetPath, SampledPath, VectorSource};
use mflq::Mat;

enum Column {
    Theta(usize, usize),
    ThetaBar(usize, usize),
    Offset(usize),
}

fn column(name: &str, m: usize, n: usize) -> Result<Column> {
    let idx = |s: &str| s.parse::<usize>().with_context(|| format!("bad index in column `{name}`"));
    let parts: Vec<&str> = name.trim().split('_').collect();
    let col = match parts.as_slice() {
        ["Theta", i, j] => Column::Theta(idx(i)?, idx(j)?),
        ["ThetaBar", i, j] => Column::ThetaBar(idx(i)?, idx(j)?),
        ["v", i] => Column::Offset(idx(i)?),
        _ => bail!("unknown candidate column `{name}`"),
    };
    let ok = match col {
        Column::Theta(i, j) | Column::ThetaBar(i, j) => i < m && j < n,
        Column::Offset(i) => i < m,
    };
    if !ok {
        bail!("column `{name}` is out of range for a game with n = {n}, m = {m}");
    }
    Ok(col)
}

pub struct Candidate {
    pub law: ControlLaw,
    pub has_gains: bool,
}

pub fn load(path: &Path, spec: &GameSpec) -> Result<Candidate> {
    let (m, n) = (spec.control_dim(), spec.n);
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("t") {
        bail!("candidate CSV must start with a `t` column");
    }
    let columns = headers.iter().skip(1).map(|h| column(h, m, n)).collect::<Result<Vec<_>>>()?;
    let has_gains = columns.iter().any(|c| !matches!(c, Column::Offset(_)));
    let has_offset = columns.iter().any(|c| matches!(c, Column::Offset(_)));

    let (mut times, mut theta, mut theta_bar, mut offset) = (vec![], vec![], vec![], vec![]);
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("non-numeric entry in row {}", row + 1))?;
        if values.len() != columns.len() + 1 {
            bail!("row {} has {} fields, expected {}", row + 1, values.len(), columns.len() + 1);
        }
        let (mut th, mut tb, mut v) = (Mat::zeros(m, n), Mat::zeros(m, n), Mat::zeros(m, 1));
        for (c, val) in columns.iter().zip(&values[1..]) {
            match *c {
                Column::Theta(i, j) => th[(i, j)] = *val,
                Column::ThetaBar(i, j) => tb[(i, j)] = *val,
                Column::Offset(i) => v[(i, 0)] = *val,
            }
        }
        times.push(values[0]);
        theta.push(th);
        theta_bar.push(tb);
        offset.push(v);
    }
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        bail!("candidate CSV has no rows");
    };
    let slack = 1e-9 * spec.horizon;
    if first > slack || last < spec.horizon - slack {
        bail!("candidate rows cover [{first}, {last}] but must cover [0, {}]", spec.horizon);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        bail!("candidate times must be strictly increasing");
    }

    let gains = if has_gains {
        Gains::Sampled {
            theta: SampledPath::new(times.clone(), theta)?,
            theta_bar: SampledPath::new(times.clone(), theta_bar)?,
        }
    } else {
        Gains::Zero
    };
    let offset = if has_offset {
        OffsetPath::from_source(VectorSource::Sampled(SampledPath::new(times, offset)?))?
    } else {
        OffsetPath::zero(m)
    };
    let law = ControlLaw { gains, offset };
    law.check_dims(spec)?;
    Ok(Candidate { law, has_gains })
}
