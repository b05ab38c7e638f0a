//! Binary model container: `RELM`, u32 version, u64-length-prefixed sections,
//! trailing CRC-32 over everything before it. Little-endian throughout.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cmaes::{CmaesState, EigenSchedule};
use crate::environment::{Entry, ReplayWindow};
use crate::evaluator::Baselines;
use crate::ingest::{write_atomic, Column, ColumnStats, FeatureSchema, Role, StandardizationStats, Value};
use crate::latent::{Encoders, PartEncoder, PcaModel, RbmModel, StateVector};
use crate::policy::{Activation, Genome, Topology};

use super::metrics::{read_metrics_csv, write_metrics_csv};
use super::{ControllerError, RawHistory, RelmConfig, RelmModel};

pub const MAGIC: &[u8; 4] = b"RELM";
pub const FORMAT_VERSION: u32 = 1;

const SECTIONS: usize = 13;

#[derive(Default)]
struct Out(Vec<u8>);

impl Out {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.len(v.len());
        v.iter().for_each(|&x| self.f64(x));
    }
    fn usizes(&mut self, v: &[usize]) {
        self.len(v.len());
        v.iter().for_each(|&x| self.len(x));
    }
    fn opt_u64(&mut self, v: Option<u64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.u64(x);
            }
            None => self.u8(0),
        }
    }
    fn matrix(&mut self, m: &DMatrix<f64>) {
        self.len(m.nrows());
        self.len(m.ncols());
        m.as_slice().iter().for_each(|&x| self.f64(x));
    }
    fn rng(&mut self, r: &ChaCha8Rng) {
        self.0.extend_from_slice(&r.get_seed());
        self.u64(r.get_stream());
        self.u128(r.get_word_pos());
    }
}

struct In<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> In<'a> {
    fn new(buf: &'a [u8], section: &'static str) -> Self {
        In { buf, pos: 0, section }
    }

    fn err(&self, what: &str) -> ControllerError {
        ControllerError::Persist(format!("{} section: {what}", self.section))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ControllerError> {
        if self.buf.len() - self.pos < n {
            return Err(self.err("truncated"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ControllerError> {
        Ok(self.take(1)?[0])
    }
    fn u64(&mut self) -> Result<u64, ControllerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn u128(&mut self) -> Result<u128, ControllerError> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }
    fn f64(&mut self) -> Result<f64, ControllerError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn bool(&mut self) -> Result<bool, ControllerError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(self.err("bad flag byte")),
        }
    }
    /// A length bounded by the remaining bytes, so corrupt input cannot
    /// trigger huge allocations.
    fn len(&mut self, min_item_bytes: usize) -> Result<usize, ControllerError> {
        let n = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(min_item_bytes.max(1) as u64) > remaining && min_item_bytes > 0 {
            return Err(self.err("length exceeds data"));
        }
        usize::try_from(n).map_err(|_| self.err("length overflow"))
    }
    fn size(&mut self) -> Result<usize, ControllerError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.err("size overflow"))
    }
    fn str(&mut self) -> Result<String, ControllerError> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| self.err("invalid utf-8"))
    }
    fn f64s(&mut self) -> Result<Vec<f64>, ControllerError> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn usizes(&mut self) -> Result<Vec<usize>, ControllerError> {
        let n = self.len(8)?;
        (0..n).map(|_| self.size()).collect()
    }
    fn opt_u64(&mut self) -> Result<Option<u64>, ControllerError> {
        Ok(if self.bool()? { Some(self.u64()?) } else { None })
    }
    fn matrix(&mut self) -> Result<DMatrix<f64>, ControllerError> {
        let r = self.size()?;
        let c = self.size()?;
        let count = r.checked_mul(c).ok_or_else(|| self.err("matrix size overflow"))?;
        if count.saturating_mul(8) > self.buf.len() - self.pos {
            return Err(self.err("matrix exceeds data"));
        }
        let data: Vec<f64> = (0..count).map(|_| self.f64()).collect::<Result<_, _>>()?;
        Ok(DMatrix::from_vec(r, c, data))
    }
    fn rng(&mut self) -> Result<ChaCha8Rng, ControllerError> {
        let seed: [u8; 32] = self.take(32)?.try_into().expect("32 bytes");
        let mut r = ChaCha8Rng::from_seed(seed);
        r.set_stream(self.u64()?);
        r.set_word_pos(self.u128()?);
        Ok(r)
    }
    fn finish(&self) -> Result<(), ControllerError> {
        if self.pos != self.buf.len() {
            return Err(self.err("trailing bytes"));
        }
        Ok(())
    }
}

fn put_schema(o: &mut Out, s: &FeatureSchema) {
    o.len(s.columns().len());
    for c in s.columns() {
        o.str(&c.name);
        o.str(c.role.as_str());
        match &c.categories {
            Some(cats) => {
                o.u8(1);
                o.len(cats.len());
                cats.iter().for_each(|x| o.str(x));
            }
            None => o.u8(0),
        }
    }
}

fn get_schema(i: &mut In) -> Result<FeatureSchema, ControllerError> {
    let n = i.len(10)?;
    let mut cols = Vec::with_capacity(n);
    for _ in 0..n {
        let name = i.str()?;
        let role = i.str()?;
        let role = Role::parse(&role).ok_or_else(|| i.err("unknown role"))?;
        let categories = if i.bool()? {
            let k = i.len(8)?;
            Some((0..k).map(|_| i.str()).collect::<Result<Vec<_>, _>>()?)
        } else {
            None
        };
        cols.push(Column {
            name,
            role,
            categories,
        });
    }
    Ok(FeatureSchema::new(cols)?)
}

fn put_stats(o: &mut Out, s: &StandardizationStats) {
    o.len(s.columns.len());
    for c in &s.columns {
        o.len(c.column);
        o.f64(c.mean);
        o.f64(c.std);
        o.u8(c.constant as u8);
    }
}

fn get_stats(i: &mut In) -> Result<StandardizationStats, ControllerError> {
    let n = i.len(25)?;
    let columns = (0..n)
        .map(|_| {
            Ok(ColumnStats {
                column: i.size()?,
                mean: i.f64()?,
                std: i.f64()?,
                constant: i.bool()?,
            })
        })
        .collect::<Result<_, ControllerError>>()?;
    Ok(StandardizationStats { columns })
}

fn put_encoders(o: &mut Out, e: &Encoders) {
    match &e.continuous {
        None => o.u8(0),
        Some(PartEncoder::Passthrough) => o.u8(1),
        Some(PartEncoder::Fitted(p)) => {
            o.u8(2);
            o.len(p.input_dim);
            o.len(p.latent_dim);
            o.f64s(&p.mean);
            o.f64s(&p.components);
            o.f64s(&p.explained_variance);
        }
    }
    match &e.discrete {
        None => o.u8(0),
        Some(PartEncoder::Passthrough) => o.u8(1),
        Some(PartEncoder::Fitted(r)) => {
            o.u8(2);
            o.len(r.visible_dim);
            o.len(r.hidden_dim);
            o.f64s(&r.weights);
            o.f64s(&r.visible_bias);
            o.f64s(&r.hidden_bias);
        }
    }
}

fn get_encoders(i: &mut In) -> Result<Encoders, ControllerError> {
    let continuous = match i.u8()? {
        0 => None,
        1 => Some(PartEncoder::Passthrough),
        2 => Some(PartEncoder::Fitted(PcaModel {
            input_dim: i.size()?,
            latent_dim: i.size()?,
            mean: i.f64s()?,
            components: i.f64s()?,
            explained_variance: i.f64s()?,
        })),
        _ => return Err(i.err("bad continuous encoder tag")),
    };
    let discrete = match i.u8()? {
        0 => None,
        1 => Some(PartEncoder::Passthrough),
        2 => Some(PartEncoder::Fitted(RbmModel {
            visible_dim: i.size()?,
            hidden_dim: i.size()?,
            weights: i.f64s()?,
            visible_bias: i.f64s()?,
            hidden_bias: i.f64s()?,
        })),
        _ => return Err(i.err("bad discrete encoder tag")),
    };
    if let Some(PartEncoder::Fitted(p)) = &continuous {
        if p.mean.len() != p.input_dim || p.components.len() != p.input_dim * p.latent_dim {
            return Err(i.err("PCA shape mismatch"));
        }
    }
    if let Some(PartEncoder::Fitted(r)) = &discrete {
        if r.weights.len() != r.visible_dim * r.hidden_dim
            || r.visible_bias.len() != r.visible_dim
            || r.hidden_bias.len() != r.hidden_dim
        {
            return Err(i.err("RBM shape mismatch"));
        }
    }
    Ok(Encoders {
        continuous,
        discrete,
    })
}

fn put_topology(o: &mut Out, t: &Topology) {
    o.usizes(t.layer_sizes());
    o.len(t.activations().len());
    t.activations().iter().for_each(|a| o.str(a.as_str()));
}

fn get_topology(i: &mut In) -> Result<Topology, ControllerError> {
    let sizes = i.usizes()?;
    let n = i.len(9)?;
    let acts = (0..n)
        .map(|_| {
            let s = i.str()?;
            Activation::parse(&s).ok_or_else(|| i.err("unknown activation"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Topology::new(sizes, acts)?)
}

fn put_cmaes(o: &mut Out, c: &CmaesState) {
    o.len(c.n);
    o.f64s(c.mean.as_slice());
    o.f64(c.sigma);
    o.matrix(&c.cov);
    o.f64s(c.p_sigma.as_slice());
    o.f64s(c.p_c.as_slice());
    o.u64(c.generation);
    o.len(c.lambda);
    o.len(c.mu);
    o.f64s(&c.weights);
    for v in [c.mu_eff, c.c_sigma, c.d_sigma, c.c_c, c.c_1, c.c_mu, c.chi_n] {
        o.f64(v);
    }
    match &c.best_ever {
        Some((x, f)) => {
            o.u8(1);
            o.f64s(x.as_slice());
            o.f64(*f);
        }
        None => o.u8(0),
    }
    o.matrix(&c.basis);
    o.f64s(c.scales.as_slice());
    o.u64(c.eigen_generation);
    o.str(c.schedule.as_str());
    o.rng(&c.rng);
    match &c.pending {
        Some(pop) => {
            o.u8(1);
            o.len(pop.len());
            pop.iter().for_each(|x| o.f64s(x.as_slice()));
        }
        None => o.u8(0),
    }
    o.u64(c.clamp_events);
    o.u64(c.nonfinite_events);
}

fn get_cmaes(i: &mut In) -> Result<CmaesState, ControllerError> {
    let n = i.size()?;
    let vec_n = |i: &mut In| -> Result<DVector<f64>, ControllerError> {
        let v = i.f64s()?;
        if v.len() != n {
            return Err(i.err("vector length mismatch"));
        }
        Ok(DVector::from_vec(v))
    };
    let mean = vec_n(i)?;
    let sigma = i.f64()?;
    let cov = i.matrix()?;
    let p_sigma = vec_n(i)?;
    let p_c = vec_n(i)?;
    let generation = i.u64()?;
    let lambda = i.size()?;
    let mu = i.size()?;
    let weights = i.f64s()?;
    let mut consts = [0.0; 7];
    for c in consts.iter_mut() {
        *c = i.f64()?;
    }
    let [mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu, chi_n] = consts;
    let best_ever = if i.bool()? {
        let x = vec_n(i)?;
        Some((x, i.f64()?))
    } else {
        None
    };
    let basis = i.matrix()?;
    let scales = vec_n(i)?;
    let eigen_generation = i.u64()?;
    let schedule = i.str()?;
    let schedule = EigenSchedule::parse(&schedule).ok_or_else(|| i.err("unknown eigen schedule"))?;
    let rng = i.rng()?;
    let pending = if i.bool()? {
        let k = i.len(8)?;
        Some((0..k).map(|_| vec_n(i)).collect::<Result<Vec<_>, _>>()?)
    } else {
        None
    };
    let clamp_events = i.u64()?;
    let nonfinite_events = i.u64()?;
    if cov.shape() != (n, n) || basis.shape() != (n, n) || weights.len() != mu || mu > lambda {
        return Err(i.err("optimizer shape mismatch"));
    }
    Ok(CmaesState {
        n,
        mean,
        sigma,
        cov,
        p_sigma,
        p_c,
        generation,
        lambda,
        mu,
        weights,
        mu_eff,
        c_sigma,
        d_sigma,
        c_c,
        c_1,
        c_mu,
        chi_n,
        best_ever,
        basis,
        scales,
        eigen_generation,
        schedule,
        rng,
        pending,
        clamp_events,
        nonfinite_events,
    })
}

fn put_rows(o: &mut Out, rows: &[Vec<f64>]) {
    o.len(rows.len());
    rows.iter().for_each(|r| o.f64s(r));
}

fn get_rows(i: &mut In) -> Result<Vec<Vec<f64>>, ControllerError> {
    let n = i.len(8)?;
    (0..n).map(|_| i.f64s()).collect()
}

fn put_window(o: &mut Out, w: &ReplayWindow) {
    o.u64(w.capacity_periods());
    o.opt_u64(w.current_period());
    o.opt_u64(w.dim().map(|d| d as u64));
    o.len(w.len());
    for e in w.entries() {
        o.u64(e.period);
        o.u8(e.label);
        o.f64s(&e.state.0);
    }
}

fn get_window(i: &mut In) -> Result<ReplayWindow, ControllerError> {
    let capacity = i.u64()?;
    let current = i.opt_u64()?;
    let dim = i.opt_u64()?.map(|d| d as usize);
    let n = i.len(17)?;
    let entries = (0..n)
        .map(|_| {
            Ok(Entry {
                period: i.u64()?,
                label: i.u8()?,
                state: StateVector(i.f64s()?),
            })
        })
        .collect::<Result<Vec<_>, ControllerError>>()?;
    if capacity == 0 || entries.windows(2).any(|w| w[1].period < w[0].period) {
        return Err(i.err("window invariants violated"));
    }
    Ok(ReplayWindow::from_parts(capacity, current, dim, entries))
}

fn put_raw(o: &mut Out, r: &RawHistory) {
    o.len(r.entries.len());
    for (p, rec) in &r.entries {
        o.u64(*p);
        o.len(rec.len());
        for v in rec {
            match v {
                Value::Num(x) => {
                    o.u8(0);
                    o.f64(*x);
                }
                Value::Cat(s) => {
                    o.u8(1);
                    o.str(s);
                }
            }
        }
    }
}

fn get_raw(i: &mut In) -> Result<RawHistory, ControllerError> {
    let n = i.len(16)?;
    let mut entries = VecDeque::with_capacity(n);
    for _ in 0..n {
        let p = i.u64()?;
        let k = i.len(9)?;
        let rec = (0..k)
            .map(|_| match i.u8()? {
                0 => Ok(Value::Num(i.f64()?)),
                1 => Ok(Value::Cat(i.str()?)),
                _ => Err(i.err("bad value tag")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        entries.push_back((p, rec));
    }
    Ok(RawHistory { entries })
}

/// Serializes `m` into the container format.
pub fn write_model(m: &RelmModel) -> Vec<u8> {
    let mut sections: Vec<Out> = (0..SECTIONS).map(|_| Out::default()).collect();
    put_schema(&mut sections[0], &m.schema);
    put_stats(&mut sections[1], &m.stats);
    put_encoders(&mut sections[2], &m.encoders);
    put_topology(&mut sections[3], &m.topology);
    sections[4].f64s(&m.genome.0);
    put_cmaes(&mut sections[5], &m.cmaes);
    put_rows(&mut sections[6], &m.snapshot);
    sections[7].f64(m.baselines.accuracy);
    sections[7].f64(m.baselines.f1);
    put_window(&mut sections[8], &m.window);
    put_raw(&mut sections[9], &m.raw);
    {
        let o = &mut sections[10];
        o.rng(&m.rng);
        o.u64(m.step);
        o.u64(m.recalibrations);
    }
    sections[11].str(&m.config.to_kv());
    {
        let mut csv = Vec::new();
        write_metrics_csv(&m.metrics, &mut csv).expect("writing to memory");
        sections[12].0 = csv;
    }

    let mut out = Out::default();
    out.0.extend_from_slice(MAGIC);
    out.u32(FORMAT_VERSION);
    for s in &sections {
        out.len(s.0.len());
        out.0.extend_from_slice(&s.0);
    }
    let crc = crc32fast::hash(&out.0);
    out.u32(crc);
    out.0
}

const SECTION_NAMES: [&str; SECTIONS] = [
    "schema",
    "stats",
    "encoders",
    "topology",
    "genome",
    "optimizer",
    "snapshot",
    "baselines",
    "window",
    "raw history",
    "controller",
    "config",
    "metrics",
];

/// Parses a container produced by [`write_model`].
pub fn read_model(bytes: &[u8]) -> Result<RelmModel, ControllerError> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(ControllerError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(ControllerError::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    if bytes.len() < 12 {
        return Err(ControllerError::Persist("file truncated".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let found = crc32fast::hash(body);
    if stored != found {
        return Err(ControllerError::Checksum { stored, found });
    }

    let mut outer = In::new(&body[8..], "container");
    let mut parts: Vec<&[u8]> = Vec::with_capacity(SECTIONS);
    for _ in 0..SECTIONS {
        let n = outer.len(1)?;
        parts.push(outer.take(n)?);
    }
    outer.finish()?;
    let sec = |k: usize| In::new(parts[k], SECTION_NAMES[k]);

    let mut i = sec(0);
    let schema = get_schema(&mut i)?;
    i.finish()?;
    let mut i = sec(1);
    let stats = get_stats(&mut i)?;
    i.finish()?;
    let mut i = sec(2);
    let encoders = get_encoders(&mut i)?;
    i.finish()?;
    let mut i = sec(3);
    let topology = get_topology(&mut i)?;
    i.finish()?;
    let mut i = sec(4);
    let genome = Genome(i.f64s()?);
    i.finish()?;
    genome.check(&topology)?;
    let mut i = sec(5);
    let cmaes = get_cmaes(&mut i)?;
    i.finish()?;
    if cmaes.n != genome.len() {
        return Err(ControllerError::Persist("optimizer dimension differs from genome".into()));
    }
    let mut i = sec(6);
    let snapshot = get_rows(&mut i)?;
    i.finish()?;
    if snapshot.iter().any(|r| r.len() != topology.input_dim()) {
        return Err(ControllerError::Persist("snapshot dimension differs from topology input".into()));
    }
    let mut i = sec(7);
    let baselines = Baselines {
        accuracy: i.f64()?,
        f1: i.f64()?,
    };
    i.finish()?;
    let mut i = sec(8);
    let window = get_window(&mut i)?;
    i.finish()?;
    let mut i = sec(9);
    let raw = get_raw(&mut i)?;
    i.finish()?;
    let mut i = sec(10);
    let rng = i.rng()?;
    let step = i.u64()?;
    let recalibrations = i.u64()?;
    i.finish()?;
    let mut i = sec(11);
    let config = RelmConfig::parse(&i.str()?)?;
    i.finish()?;
    let text = std::str::from_utf8(parts[12])
        .map_err(|_| ControllerError::Persist("metrics section is not utf-8".into()))?;
    let metrics = read_metrics_csv(text)?;

    Ok(RelmModel {
        config,
        schema,
        stats,
        encoders,
        topology,
        genome,
        cmaes,
        snapshot,
        baselines,
        window,
        metrics,
        raw,
        rng,
        step,
        recalibrations,
        checkpoint: None,
    })
}

pub fn save_model(m: &RelmModel, path: impl AsRef<Path>) -> Result<(), ControllerError> {
    let bytes = write_model(m);
    write_atomic(path, |w| w.write_all(&bytes))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RelmModel, ControllerError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ControllerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_synthetic_drift, train_initial, SynthSpec};
    use super::*;

    fn model() -> RelmModel {
        let mut cfg = RelmConfig::default();
        cfg.hidden = vec![4];
        cfg.latent.mute = true;
        cfg.cmaes.max_generations = 3;
        cfg.env.batch_size = 64;
        let d = generate_synthetic_drift(&SynthSpec {
            rows_per_period: 100,
            periods: 2,
            ..Default::default()
        })
        .unwrap();
        train_initial(&cfg, &d).unwrap()
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let m = model();
        let bytes = write_model(&m);
        let back = read_model(&bytes).unwrap();
        assert_eq!(write_model(&back), bytes);
        assert_eq!(back.genome, m.genome);
        assert_eq!(back.metrics, m.metrics);
    }

    #[test]
    fn wrong_version_is_named() {
        let mut bytes = write_model(&model());
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        let e = read_model(&bytes).unwrap_err();
        assert!(matches!(e, ControllerError::UnsupportedVersion { found: 7, .. }));
        assert!(e.to_string().contains("version 7"));
    }

    #[test]
    fn wrong_magic_and_corruption() {
        let mut bytes = write_model(&model());
        assert!(matches!(read_model(b"NOPE\x01\0\0\0"), Err(ControllerError::BadMagic)));
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(read_model(&bytes), Err(ControllerError::Checksum { .. })));
        assert!(read_model(&bytes[..10]).is_err());
    }

    #[test]
    fn encoders_round_trip_fitted() {
        let mut o = Out::default();
        let enc = Encoders {
            continuous: Some(PartEncoder::Fitted(PcaModel {
                input_dim: 2,
                latent_dim: 1,
                mean: vec![0.5, -0.5],
                components: vec![0.6, 0.8],
                explained_variance: vec![1.25],
            })),
            discrete: Some(PartEncoder::Fitted(RbmModel {
                visible_dim: 2,
                hidden_dim: 1,
                weights: vec![0.1, -0.2],
                visible_bias: vec![0.0, 0.3],
                hidden_bias: vec![-0.4],
            })),
        };
        put_encoders(&mut o, &enc);
        let mut i = In::new(&o.0, "encoders");
        assert_eq!(get_encoders(&mut i).unwrap(), enc);
        i.finish().unwrap();
    }
}
