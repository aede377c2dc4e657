use crate::error::{Error, Result};
use crate::tdsys::CompiledTdvf;

/// How an integration run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Completed,
    /// The state norm crossed the blow-up threshold at `t_event`.
    BlewUp { t_event: f64 },
    StepFailure { t: f64, reason: String },
}

/// Node values of a solution with dense output: cubic Hermite between
/// nodes, plus an optional quartic term `θ²(1−θ)²·q` per interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    vars: Vec<String>,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    /// Empty, or one quartic coefficient vector per interval.
    quartic: Vec<Vec<f64>>,
    status: Status,
}

impl Trajectory {
    pub fn from_parts(
        vars: Vec<String>,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        derivs: Vec<Vec<f64>>,
        status: Status,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Invalid("trajectory without nodes".into()));
        }
        if times.len() != states.len() || times.len() != derivs.len() {
            return Err(Error::LengthMismatch { what: "trajectory nodes", left: times.len(), right: states.len() });
        }
        if let Some(w) = times.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid(format!("node times not strictly increasing at {}", w[1])));
        }
        let k = vars.len();
        if states.iter().chain(&derivs).any(|s| s.len() != k) {
            return Err(Error::LengthMismatch { what: "state dimension", left: k, right: states[0].len() });
        }
        Ok(Trajectory { vars, times, states, derivs, quartic: Vec::new(), status })
    }

    /// Attaches quartic interval coefficients to the dense output.
    pub fn with_quartic(mut self, quartic: Vec<Vec<f64>>) -> Result<Self> {
        if quartic.len() != self.times.len() - 1 {
            return Err(Error::LengthMismatch { what: "quartic intervals", left: quartic.len(), right: self.times.len() - 1 });
        }
        if quartic.iter().any(|q| q.len() != self.dim()) {
            return Err(Error::LengthMismatch { what: "quartic dimension", left: self.dim(), right: quartic[0].len() });
        }
        self.quartic = quartic;
        Ok(self)
    }

    pub fn quartic(&self) -> &[Vec<f64>] {
        &self.quartic
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn derivs(&self) -> &[Vec<f64>] {
        &self.derivs
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.t_start() && t <= self.t_end()
    }

    pub fn is_complete(&self) -> bool {
        self.status == Status::Completed
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// State and derivative of the dense output at `t`.
    pub fn dense_eval(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !self.covers(t) {
            return Err(Error::OutOfRange { t, start: self.t_start(), end: self.t_end() });
        }
        let k = self.times.partition_point(|&s| s <= t);
        let i = k - 1;
        if self.times[i] == t {
            return Ok((self.states[i].clone(), self.derivs[i].clone()));
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let (y0, y1) = (&self.states[i], &self.states[i + 1]);
        let (f0, f1) = (&self.derivs[i], &self.derivs[i + 1]);
        let mut y = Vec::with_capacity(y0.len());
        let mut dy = Vec::with_capacity(y0.len());
        for c in 0..y0.len() {
            y.push(h00 * y0[c] + h10 * h * f0[c] + h01 * y1[c] + h11 * h * f1[c]);
            dy.push((d00 * y0[c] + d01 * y1[c]) / h + d10 * f0[c] + d11 * f1[c]);
        }
        if let Some(q) = self.quartic.get(i) {
            let u = s * (1.0 - s);
            let du = 2.0 * u * (1.0 - 2.0 * s) / h;
            for c in 0..q.len() {
                y[c] += u * u * q[c];
                dy[c] += du * q[c];
            }
        }
        Ok((y, dy))
    }

    pub fn state_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.dense_eval(t)?.0)
    }

    /// CSV with header `t,<var1>,...,<varK>`, one row per node. Values are
    /// written in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend(self.vars.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![t.to_string()];
            row.extend(s.iter().map(f64::to_string));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Reads the format written by [`Trajectory::to_csv`]. With `system`,
    /// node derivatives and quartic dense output come from the system;
    /// otherwise derivatives are second-order finite differences of the
    /// samples and the dense output is cubic.
    pub fn from_csv(text: &str, system: Option<&CompiledTdvf>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
        if header.get(0) != Some("t") || header.len() < 2 {
            return Err(Error::Csv("header must be `t,<var1>,...`".into()));
        }
        let vars: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| Error::Csv(format!("row {}: `{s}` is not a number", line + 2))))
                .collect::<Result<_>>()?;
            if vals.len() != vars.len() + 1 {
                return Err(Error::Csv(format!("row {} has {} fields, expected {}", line + 2, vals.len(), vars.len() + 1)));
            }
            times.push(vals[0]);
            states.push(vals[1..].to_vec());
        }
        if times.is_empty() {
            return Err(Error::Csv("no data rows".into()));
        }
        let Some(sys) = system else {
            let derivs = finite_difference_derivs(&times, &states);
            return Trajectory::from_parts(vars, times, states, derivs, Status::Completed);
        };
        if sys.dim() != vars.len() {
            return Err(Error::LengthMismatch { what: "csv columns vs system", left: vars.len(), right: sys.dim() });
        }
        let derivs: Vec<Vec<f64>> = times.iter().zip(&states).map(|(&t, y)| sys.eval(t, y)).collect::<Result<_>>()?;
        let quartic = super::step_quartics(sys, &times, &states, &derivs)?;
        Trajectory::from_parts(vars, times, states, derivs, Status::Completed)?.with_quartic(quartic)
    }

    /// Same nodes with every state mapped by `f(t, y, ẏ) -> (z, ż)`. With
    /// quartic dense output, each interval's quartic term is fitted to the
    /// mapped value at its midpoint.
    pub(crate) fn map_states<F>(&self, vars: Vec<String>, f: F) -> Result<Self>
    where
        F: Fn(f64, &[f64], &[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
    {
        let mut states = Vec::with_capacity(self.times.len());
        let mut derivs = Vec::with_capacity(self.times.len());
        for ((&t, y), d) in self.times.iter().zip(&self.states).zip(&self.derivs) {
            let (z, dz) = f(t, y, d)?;
            states.push(z);
            derivs.push(dz);
        }
        let mapped = Trajectory::from_parts(vars, self.times.clone(), states, derivs, self.status.clone())?;
        if self.quartic.is_empty() {
            return Ok(mapped);
        }
        let mut quartic = Vec::with_capacity(self.quartic.len());
        for (i, w) in self.times.windows(2).enumerate() {
            let mid = 0.5 * (w[0] + w[1]);
            let (y, d) = self.dense_eval(mid)?;
            let (z, _) = f(mid, &y, &d)?;
            let unchanged = z == y && mapped.states[i] == self.states[i] && mapped.states[i + 1] == self.states[i + 1];
            if unchanged && mapped.derivs[i] == self.derivs[i] && mapped.derivs[i + 1] == self.derivs[i + 1] {
                quartic.push(self.quartic[i].clone());
                continue;
            }
            let cubic = mapped.dense_eval(mid)?.0;
            quartic.push(z.iter().zip(&cubic).map(|(a, b)| 16.0 * (a - b)).collect());
        }
        mapped.with_quartic(quartic)
    }
}

fn finite_difference_derivs(times: &[f64], states: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = times.len();
    let k = states[0].len();
    if n == 1 {
        return vec![vec![0.0; k]];
    }
    if n == 2 {
        let h = times[1] - times[0];
        let d: Vec<f64> = (0..k).map(|c| (states[1][c] - states[0][c]) / h).collect();
        return vec![d.clone(), d];
    }
    // three-point formulas on a nonuniform grid
    let three = |i0: usize, at: usize| -> Vec<f64> {
        let (x0, x1, x2) = (times[i0], times[i0 + 1], times[i0 + 2]);
        let x = times[at];
        let w0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let w1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let w2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        (0..k).map(|c| w0 * states[i0][c] + w1 * states[i0 + 1][c] + w2 * states[i0 + 2][c]).collect()
    };
    (0..n)
        .map(|i| {
            let i0 = i.saturating_sub(1).min(n - 3);
            three(i0, i)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Trajectory {
        // x = t, v = 1
        let times = vec![0.0, 0.3, 1.0];
        let states = times.iter().map(|&t| vec![t, 1.0]).collect();
        let derivs = times.iter().map(|_| vec![1.0, 0.0]).collect();
        Trajectory::from_parts(vec!["x".into(), "v".into()], times, states, derivs, Status::Completed).unwrap()
    }

    #[test]
    fn hermite_reproduces_linear_functions() {
        let tr = line();
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            let (y, dy) = tr.dense_eval(t).unwrap();
            assert!((y[0] - t).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
            assert!((dy[0] - 1.0).abs() < 1e-14 && dy[1].abs() < 1e-14);
        }
    }

    #[test]
    fn node_values_are_exact() {
        let tr = line();
        assert_eq!(tr.dense_eval(0.3).unwrap().0, vec![0.3, 1.0]);
        assert!(matches!(tr.dense_eval(1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let times = vec![0.0, 0.1, 0.25];
        let states = vec![vec![1.0 / 3.0, -2.0e-17], vec![std::f64::consts::PI, 1e300], vec![-0.0, 7.5]];
        let derivs = vec![vec![0.0; 2]; 3];
        let tr = Trajectory::from_parts(vec!["x".into(), "v".into()], times, states, derivs, Status::Completed).unwrap();
        let text = tr.to_csv();
        assert!(text.starts_with("t,x,v\n"));
        let back = Trajectory::from_csv(&text, None).unwrap();
        assert_eq!(back.times(), tr.times());
        assert_eq!(back.states(), tr.states());
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(Trajectory::from_csv("x,v\n1,2\n", None).is_err());
        assert!(Trajectory::from_csv("t,x\n0,abc\n", None).is_err());
        assert!(Trajectory::from_csv("t,x\n1,0\n0,1\n", None).is_err());
    }

    #[test]
    fn finite_differences_are_exact_on_quadratics() {
        let times = vec![0.0, 0.1, 0.35, 0.5, 1.0];
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![t * t]).collect();
        let d = finite_difference_derivs(&times, &states);
        for (t, d) in times.iter().zip(d) {
            assert!((d[0] - 2.0 * t).abs() < 1e-12);
        }
    }
}
