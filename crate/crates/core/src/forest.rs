//! Random-forest regression for dwell and travel times.
//!
//! Trees are grown CART-style on bootstrap resamples, choosing at each node
//! the split with the largest reduction in squared error among `m` randomly
//! visited features. Numeric features split as `x <= v`, categorical ones as
//! `x == v` against the rest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::simnet::{HubId, Location, Network, ParcelLog};
use crate::{Error, Minute, Result, MINUTES_PER_DAY};

const FORMAT_HEADER: &str = "#hubcast-forest v1";
const MODELS_HEADER: &str = "#hubcast-timemodels v1";

/// Entities with fewer samples than this get a constant class-mean model.
pub const MIN_ENTITY_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

impl FeatureKind {
    fn code(self) -> char {
        match self {
            FeatureKind::Numeric => 'n',
            FeatureKind::Categorical => 'c',
        }
    }

    fn from_code(c: &str) -> Option<Self> {
        match c {
            "n" => Some(FeatureKind::Numeric),
            "c" => Some(FeatureKind::Categorical),
            _ => None,
        }
    }
}

/// One historical stay: where, when it began, and how long it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub entity: u32,
    pub hour: u8,
    pub weekday: u8,
    pub target: f64,
}

impl TimeSample {
    pub const SCHEMA: [FeatureKind; 3] =
        [FeatureKind::Categorical, FeatureKind::Numeric, FeatureKind::Categorical];

    pub fn features(&self) -> [f64; 3] {
        time_features(self.entity, self.hour, self.weekday)
    }
}

pub fn time_features(entity: u32, hour: u8, weekday: u8) -> [f64; 3] {
    [entity as f64, hour as f64, weekday as f64]
}

/// Hour of day and weekday of a minute.
pub fn clock(at: Minute) -> (u8, u8) {
    (((at % MINUTES_PER_DAY) / 60) as u8, ((at / MINUTES_PER_DAY) % 7) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    /// Features tried per split; `None` means `max(1, d / 3)`.
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    /// Draw a bootstrap resample per tree. Without it every tree sees the full
    /// sample once.
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestConfig {
    pub fn new(seed: u64) -> Self {
        Self { trees: 100, max_features: None, min_leaf: 5, bootstrap: true, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(f64),
    /// Left child follows immediately; `right` is the index of the right child.
    Split { feature: usize, kind: FeatureKind, threshold: f64, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, kind, threshold, right } => {
                    let left = match kind {
                        FeatureKind::Numeric => x[feature] <= threshold,
                        FeatureKind::Categorical => x[feature] == threshold,
                    };
                    i = if left { i + 1 } else { right };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    /// Feature and threshold of the root split, if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    schema: Vec<FeatureKind>,
    max_features: usize,
    trees: Vec<RegressionTree>,
}

/// Distinct feature rows with their aggregated targets for one tree.
#[derive(Debug, Clone, Copy)]
struct Stats {
    w: f64,
    sum: f64,
    sumsq: f64,
    min: f64,
    max: f64,
}

impl Stats {
    const EMPTY: Stats = Stats { w: 0.0, sum: 0.0, sumsq: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY };

    fn add(&mut self, y: f64) {
        self.w += 1.0;
        self.sum += y;
        self.sumsq += y * y;
        self.min = self.min.min(y);
        self.max = self.max.max(y);
    }

    fn merge(&mut self, o: &Stats) {
        self.w += o.w;
        self.sum += o.sum;
        self.sumsq += o.sumsq;
        self.min = self.min.min(o.min);
        self.max = self.max.max(o.max);
    }

    fn sse(&self) -> f64 {
        self.sumsq - self.sum * self.sum / self.w
    }

    fn leaf(&self) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            (self.sum / self.w).clamp(self.min, self.max)
        }
    }
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    schema: &'a [FeatureKind],
    max_features: usize,
    min_leaf: f64,
    stats: Vec<Stats>,
    nodes: Vec<Node>,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn grow(&mut self, groups: &mut [usize], rng: &mut ChaCha8Rng) {
        let mut total = Stats::EMPTY;
        for &g in groups.iter() {
            total.merge(&self.stats[g]);
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(total.leaf()));
        if total.min == total.max || total.w < 2.0 * self.min_leaf {
            return;
        }
        let Some(best) = self.best_split(groups, &total, rng) else { return };
        let kind = self.schema[best.feature];
        let goes_left = |row: &[f64]| match kind {
            FeatureKind::Numeric => row[best.feature] <= best.threshold,
            FeatureKind::Categorical => row[best.feature] == best.threshold,
        };
        let mut split = 0;
        for i in 0..groups.len() {
            if goes_left(&self.rows[groups[i]]) {
                groups.swap(i, split);
                split += 1;
            }
        }
        let (left, right) = groups.split_at_mut(split);
        left.sort_unstable();
        right.sort_unstable();
        self.grow(left, rng);
        let right_at = self.nodes.len();
        self.grow(right, rng);
        self.nodes[at] = Node::Split { feature: best.feature, kind, threshold: best.threshold, right: right_at };
    }

    fn best_split(&self, groups: &mut [usize], total: &Stats, rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let mut order: Vec<usize> = (0..self.schema.len()).collect();
        order.shuffle(rng);
        let base = total.sum * total.sum / total.w;
        let min_gain = 1e-12 * total.sse().max(f64::MIN_POSITIVE);
        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        for f in order {
            if visited == self.max_features {
                break;
            }
            let first = self.rows[groups[0]][f];
            if groups.iter().all(|&g| self.rows[g][f] == first) {
                continue;
            }
            visited += 1;
            groups.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut runs: Vec<(f64, Stats)> = Vec::new();
            for &g in groups.iter() {
                let v = self.rows[g][f];
                match runs.last_mut() {
                    Some((rv, s)) if *rv == v => s.merge(&self.stats[g]),
                    _ => {
                        let mut s = Stats::EMPTY;
                        s.merge(&self.stats[g]);
                        runs.push((v, s));
                    }
                }
            }
            let mut consider = |left: &Stats, threshold: f64| {
                let rw = total.w - left.w;
                if left.w < self.min_leaf || rw < self.min_leaf {
                    return;
                }
                let rs = total.sum - left.sum;
                let gain = left.sum * left.sum / left.w + rs * rs / rw - base;
                if gain > min_gain && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate { gain, feature: f, threshold });
                }
            };
            match self.schema[f] {
                FeatureKind::Numeric => {
                    let mut left = Stats::EMPTY;
                    for (v, s) in &runs[..runs.len() - 1] {
                        left.merge(s);
                        consider(&left, *v);
                    }
                }
                FeatureKind::Categorical => {
                    for (v, s) in &runs {
                        consider(s, *v);
                    }
                }
            }
        }
        best
    }
}

impl Forest {
    /// Fits `cfg.trees` trees to rows `x` with targets `y`.
    pub fn fit(x: &[Vec<f64>], y: &[f64], schema: &[FeatureKind], cfg: &ForestConfig) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Training("cannot fit a forest to an empty sample".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Shape(format!("{} feature rows but {} targets", x.len(), y.len())));
        }
        let d = schema.len();
        if d == 0 || x.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("feature rows must have {d} > 0 columns")));
        }
        if cfg.trees == 0 || cfg.min_leaf == 0 {
            return Err(Error::Config("a forest needs at least one tree and min_leaf >= 1".into()));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite value in the training sample".into()));
        }
        let max_features = cfg.max_features.unwrap_or((d / 3).max(1));
        if !(1..=d).contains(&max_features) {
            return Err(Error::Config(format!("features per split must be in 1..={d}, got {max_features}")));
        }

        // Collapse identical feature rows; a tree only ever sees their aggregate.
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let group_of: Vec<usize> = x
            .iter()
            .map(|r| {
                *index.entry(r.iter().map(|v| v.to_bits()).collect()).or_insert_with(|| {
                    rows.push(r.clone());
                    rows.len() - 1
                })
            })
            .collect();

        let n = x.len();
        let mut trees = Vec::with_capacity(cfg.trees);
        for k in 0..cfg.trees {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let mut stats = vec![Stats::EMPTY; rows.len()];
            if cfg.bootstrap {
                for _ in 0..n {
                    let i = rng.random_range(0..n);
                    stats[group_of[i]].add(y[i]);
                }
            } else {
                for (i, &g) in group_of.iter().enumerate() {
                    stats[g].add(y[i]);
                }
            }
            let mut groups: Vec<usize> = (0..rows.len()).filter(|&g| stats[g].w > 0.0).collect();
            let mut grower = Grower {
                rows: &rows,
                schema,
                max_features,
                min_leaf: cfg.min_leaf as f64,
                stats,
                nodes: Vec::new(),
            };
            grower.grow(&mut groups, &mut rng);
            trees.push(RegressionTree { nodes: grower.nodes });
        }
        Ok(Self { schema: schema.to_vec(), max_features, trees })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn schema(&self) -> &[FeatureKind] {
        &self.schema
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.schema.len() {
            return Err(Error::Shape(format!("expected {} features, got {}", self.schema.len(), x.len())));
        }
        Ok(self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64)
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    fn to_text(&self) -> String {
        let mut s = String::new();
        let kinds: String = self.schema.iter().map(|k| k.code()).collect();
        let _ = writeln!(s, "{FORMAT_HEADER}");
        let _ = writeln!(s, "schema {kinds} max_features {} trees {}", self.max_features, self.trees.len());
        for tree in &self.trees {
            let _ = writeln!(s, "tree {}", tree.nodes.len());
            for node in &tree.nodes {
                let _ = match *node {
                    Node::Leaf(v) => writeln!(s, "L {v}"),
                    Node::Split { feature, kind, threshold, .. } => {
                        writeln!(s, "S {feature} {} {threshold}", kind.code())
                    }
                };
            }
        }
        s
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = Lines::new(input);
        lines.expect(FORMAT_HEADER)?;
        Self::read_body(&mut lines)
    }

    fn read_body<R: BufRead>(lines: &mut Lines<R>) -> Result<Self> {
        let head = lines.next_line()?;
        let f: Vec<&str> = head.split_whitespace().collect();
        let [ "schema", kinds, "max_features", m, "trees", k ] = f[..] else {
            return Err(lines.error("expected forest schema line"));
        };
        let schema = kinds
            .chars()
            .map(|c| FeatureKind::from_code(&c.to_string()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| lines.error("bad feature kind"))?;
        let max_features: usize = lines.num(m)?;
        let count: usize = lines.num(k)?;
        let mut trees = Vec::with_capacity(count);
        for _ in 0..count {
            let head = lines.next_line()?;
            let n: usize = match head.strip_prefix("tree ") {
                Some(n) => lines.num(n)?,
                None => return Err(lines.error("expected tree line")),
            };
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next_line()?;
                let f: Vec<&str> = line.split_whitespace().collect();
                nodes.push(match f[..] {
                    ["L", v] => Node::Leaf(lines.num(v)?),
                    ["S", feature, kind, threshold] => Node::Split {
                        feature: lines.num(feature)?,
                        kind: FeatureKind::from_code(kind).ok_or_else(|| lines.error("bad feature kind"))?,
                        threshold: lines.num(threshold)?,
                        right: 0,
                    },
                    _ => return Err(lines.error("bad node line")),
                });
            }
            link_children(&mut nodes).ok_or_else(|| lines.error("tree nodes do not form a tree"))?;
            if nodes.iter().any(|n| matches!(n, Node::Split { feature, .. } if *feature >= schema.len())) {
                return Err(lines.error("split on a feature outside the schema"));
            }
            trees.push(RegressionTree { nodes });
        }
        if trees.is_empty() || !(1..=schema.len()).contains(&max_features) {
            return Err(lines.error("forest header out of range"));
        }
        Ok(Self { schema, max_features, trees })
    }
}

/// Recomputes right-child indices of a pre-order node list.
fn link_children(nodes: &mut [Node]) -> Option<()> {
    fn walk(nodes: &mut [Node], at: usize) -> Option<usize> {
        match *nodes.get(at)? {
            Node::Leaf(_) => Some(at + 1),
            Node::Split { feature, kind, threshold, .. } => {
                let right = walk(nodes, at + 1)?;
                let end = walk(nodes, right)?;
                nodes[at] = Node::Split { feature, kind, threshold, right };
                Some(end)
            }
        }
    }
    (walk(nodes, 0)? == nodes.len()).then_some(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(input: R) -> Self {
        Self { inner: input.lines(), line: 0 }
    }

    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn expect(&mut self, text: &str) -> Result<()> {
        if self.next_line()? != text {
            return Err(self.error(&format!("expected `{text}`")));
        }
        Ok(())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.error(&format!("bad number `{s}`")))
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse { line: self.line, msg: msg.to_string() }
    }
}

/// Dwell and travel time estimates for the remaining legs of a journey.
pub trait SegmentTimes {
    /// Minutes a parcel arriving at `hub` at minute `at` is expected to stay.
    fn dwell(&self, hub: HubId, at: Minute) -> f64;
    /// Minutes a parcel entering route `from -> to` at minute `at` is expected
    /// to travel.
    fn travel(&self, from: HubId, to: HubId, at: Minute) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeModel {
    Forest(Forest),
    Constant(f64),
}

impl TimeModel {
    pub fn predict(&self, x: &[f64; 3]) -> f64 {
        match self {
            TimeModel::Forest(f) => f.predict(x).expect("time features match the schema"),
            TimeModel::Constant(c) => *c,
        }
    }
}

/// One dwell model per hub and one travel model per directed route, with
/// predictions tabulated by hour and weekday.
#[derive(Debug, Clone)]
pub struct TimeModels {
    /// Models were fitted on stays that ended before this minute.
    pub fitted_before: Minute,
    pub dwell: BTreeMap<HubId, TimeModel>,
    pub travel: BTreeMap<(HubId, HubId), TimeModel>,
    pub dwell_samples: BTreeMap<HubId, usize>,
    pub travel_samples: BTreeMap<(HubId, HubId), usize>,
    dwell_table: BTreeMap<HubId, Vec<f64>>,
    travel_table: BTreeMap<(HubId, HubId), Vec<f64>>,
}

fn route_entity(network: &Network, from: HubId, to: HubId) -> u32 {
    network.route_index(from, to).map_or(u32::MAX, |i| i as u32)
}

fn tabulate(model: &TimeModel, entity: u32) -> Vec<f64> {
    (0..7u8)
        .flat_map(|wd| (0..24u8).map(move |h| (h, wd)))
        .map(|(h, wd)| model.predict(&time_features(entity, h, wd)))
        .collect()
}

fn lookup(table: &[f64], at: Minute) -> f64 {
    let (h, wd) = clock(at);
    table[wd as usize * 24 + h as usize]
}

/// Completed hub stays and route legs, grouped by entity.
pub fn collect_time_samples(
    network: &Network,
    log: &ParcelLog,
    before: Minute,
) -> (BTreeMap<HubId, Vec<TimeSample>>, BTreeMap<(HubId, HubId), Vec<TimeSample>>) {
    let mut dwell: BTreeMap<HubId, Vec<TimeSample>> = BTreeMap::new();
    let mut travel: BTreeMap<(HubId, HubId), Vec<TimeSample>> = BTreeMap::new();
    for parcel in &log.parcels {
        if parcel.order_time >= before {
            break;
        }
        for ev in &parcel.events {
            let Some(dep) = ev.departure.filter(|&d| d < before) else { break };
            let (hour, weekday) = clock(ev.arrival);
            let target = (dep - ev.arrival) as f64;
            match ev.location {
                Location::Hub(h) => {
                    dwell.entry(h).or_default().push(TimeSample { entity: h.0 as u32, hour, weekday, target })
                }
                Location::Route(a, b) => travel.entry((a, b)).or_default().push(TimeSample {
                    entity: route_entity(network, a, b),
                    hour,
                    weekday,
                    target,
                }),
            }
        }
    }
    (dwell, travel)
}

fn fit_entity(samples: &[TimeSample], fallback: f64, cfg: &ForestConfig) -> Result<TimeModel> {
    if samples.len() < MIN_ENTITY_SAMPLES {
        return Ok(TimeModel::Constant(fallback));
    }
    let x: Vec<Vec<f64>> = samples.iter().map(|s| s.features().to_vec()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.target).collect();
    Ok(TimeModel::Forest(Forest::fit(&x, &y, &TimeSample::SCHEMA, cfg)?))
}

fn class_mean<'a>(groups: impl Iterator<Item = &'a Vec<TimeSample>>) -> Option<f64> {
    let (n, sum) = groups.flatten().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x.target));
    (n > 0).then(|| sum / n as f64)
}

/// Fits dwell and travel models on stays completed strictly before `before`.
/// Hubs and routes with too little history predict the mean of their class;
/// with no history at all, dwell falls back to zero and travel to the route's
/// base minutes.
pub fn fit_time_models(network: &Network, log: &ParcelLog, before: Minute, cfg: &ForestConfig) -> Result<TimeModels> {
    let (dwell_samples, travel_samples) = collect_time_samples(network, log, before);
    let hub_mean = class_mean(dwell_samples.values());
    let route_mean = class_mean(travel_samples.values());
    let empty = Vec::new();

    let mut models = TimeModels {
        fitted_before: before,
        dwell: BTreeMap::new(),
        travel: BTreeMap::new(),
        dwell_samples: dwell_samples.iter().map(|(k, v)| (*k, v.len())).collect(),
        travel_samples: travel_samples.iter().map(|(k, v)| (*k, v.len())).collect(),
        dwell_table: BTreeMap::new(),
        travel_table: BTreeMap::new(),
    };
    for hub in network.hub_ids() {
        let samples = dwell_samples.get(&hub).unwrap_or(&empty);
        models.dwell.insert(hub, fit_entity(samples, hub_mean.unwrap_or(0.0), cfg)?);
    }
    for r in network.routes() {
        let samples = travel_samples.get(&(r.from, r.to)).unwrap_or(&empty);
        let fallback = route_mean.unwrap_or(r.base_travel_minutes);
        models.travel.insert((r.from, r.to), fit_entity(samples, fallback, cfg)?);
    }
    models.build_tables(network);
    Ok(models)
}

impl TimeModels {
    fn build_tables(&mut self, network: &Network) {
        self.dwell_table = self.dwell.iter().map(|(&h, m)| (h, tabulate(m, h.0 as u32))).collect();
        self.travel_table = self
            .travel
            .iter()
            .map(|(&(a, b), m)| ((a, b), tabulate(m, route_entity(network, a, b))))
            .collect();
    }

    pub fn save<W: Write>(&self, network: &Network, mut out: W) -> Result<()> {
        writeln!(out, "{MODELS_HEADER} fitted_before={}", self.fitted_before)?;
        let entries = self
            .dwell
            .iter()
            .map(|(&h, m)| (network.name(h).to_string(), self.dwell_samples.get(&h).copied().unwrap_or(0), m))
            .chain(self.travel.iter().map(|(&(a, b), m)| {
                (network.route_name(a, b), self.travel_samples.get(&(a, b)).copied().unwrap_or(0), m)
            }));
        for (name, n, model) in entries {
            match model {
                TimeModel::Constant(c) => writeln!(out, "model {name} samples {n} constant {c}")?,
                TimeModel::Forest(f) => {
                    writeln!(out, "model {name} samples {n} forest")?;
                    out.write_all(f.to_text().lines().skip(1).fold(String::new(), |s, l| s + l + "\n").as_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(network: &Network, input: R) -> Result<Self> {
        let mut lines = Lines::new(input);
        let head = lines.next_line()?;
        let before = head
            .strip_prefix(MODELS_HEADER)
            .and_then(|s| s.trim().strip_prefix("fitted_before="))
            .ok_or_else(|| lines.error("missing time-model header"))?;
        let mut models = TimeModels {
            fitted_before: lines.num(before)?,
            dwell: BTreeMap::new(),
            travel: BTreeMap::new(),
            dwell_samples: BTreeMap::new(),
            travel_samples: BTreeMap::new(),
            dwell_table: BTreeMap::new(),
            travel_table: BTreeMap::new(),
        };
        let expected = network.hubs().len() + network.routes().len();
        for _ in 0..expected {
            let line = lines.next_line()?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let (name, n, model) = match f[..] {
                ["model", name, "samples", n, "constant", c] => (name, n, TimeModel::Constant(lines.num(c)?)),
                ["model", name, "samples", n, "forest"] => (name, n, TimeModel::Forest(Forest::read_body(&mut lines)?)),
                _ => return Err(lines.error("bad model line")),
            };
            let n: usize = lines.num(n)?;
            match name.split_once('-') {
                Some((a, b)) => {
                    let key = (network.hub_id(a)?, network.hub_id(b)?);
                    models.travel.insert(key, model);
                    models.travel_samples.insert(key, n);
                }
                None => {
                    let hub = network.hub_id(name)?;
                    models.dwell.insert(hub, model);
                    models.dwell_samples.insert(hub, n);
                }
            }
        }
        if models.dwell.len() != network.hubs().len() || models.travel.len() != network.routes().len() {
            return Err(lines.error("time models do not cover the network"));
        }
        models.build_tables(network);
        Ok(models)
    }
}

impl SegmentTimes for TimeModels {
    fn dwell(&self, hub: HubId, at: Minute) -> f64 {
        self.dwell_table.get(&hub).map_or(0.0, |t| lookup(t, at))
    }

    fn travel(&self, from: HubId, to: HubId, at: Minute) -> f64 {
        self.travel_table.get(&(from, to)).map_or(0.0, |t| lookup(t, at))
    }
}
