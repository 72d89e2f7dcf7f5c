use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::{Error, Result};

/// Index of a hub inside its [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HubId(pub u16);

impl HubId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HubKind {
    Access,
    Local,
    Gateway,
}

impl HubKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HubKind::Access => "access",
            HubKind::Local => "local",
            HubKind::Gateway => "gateway",
        }
    }
}

impl FromStr for HubKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "access" => Ok(HubKind::Access),
            "local" => Ok(HubKind::Local),
            "gateway" => Ok(HubKind::Gateway),
            other => Err(Error::Config(format!("unknown hub kind `{other}`"))),
        }
    }
}

impl fmt::Display for HubKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hub {
    pub id: String,
    pub kind: HubKind,
    pub label: String,
}

/// A directed link between two hubs.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub from: HubId,
    pub to: HubId,
    pub base_travel_minutes: f64,
}

/// Declarative description of a network, usually read from a TOML file.
///
/// ```toml
/// [[hub]]
/// id = "GH1"
/// kind = "gateway"
/// label = "Central gateway"
///
/// [[link]]          # undirected: expands to one route per direction
/// a = "LH1"
/// b = "GH1"
/// minutes = 24.0
/// ```
#[derive(Debug, Clone, Deserialize)]
pub struct NetworkSpec {
    #[serde(rename = "hub")]
    pub hubs: Vec<HubSpec>,
    #[serde(rename = "link", default)]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct HubSpec {
    pub id: String,
    pub kind: HubKind,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    pub minutes: f64,
}

impl NetworkSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// The network shipped with the crate and used by the demo scenario.
    pub fn demo() -> Self {
        Self::from_toml(include_str!("../../fixtures/demo_network.toml"))
            .expect("bundled network fixture parses")
    }
}

/// Hubs, directed routes and one planned path per ordered pair of access hubs.
#[derive(Debug, Clone)]
pub struct Network {
    hubs: Vec<Hub>,
    routes: Vec<Route>,
    by_id: HashMap<String, HubId>,
    route_index: HashMap<(HubId, HubId), usize>,
    paths: BTreeMap<(HubId, HubId), Vec<HubId>>,
}

impl Network {
    pub fn hubs(&self) -> &[Hub] {
        &self.hubs
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn hub(&self, id: HubId) -> &Hub {
        &self.hubs[id.index()]
    }

    pub fn hub_id(&self, name: &str) -> Result<HubId> {
        self.by_id
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownHub(name.to_string()))
    }

    pub fn name(&self, id: HubId) -> &str {
        &self.hubs[id.index()].id
    }

    pub fn route(&self, from: HubId, to: HubId) -> Option<&Route> {
        self.route_index.get(&(from, to)).map(|&i| &self.routes[i])
    }

    pub fn route_index(&self, from: HubId, to: HubId) -> Option<usize> {
        self.route_index.get(&(from, to)).copied()
    }

    pub fn path(&self, origin: HubId, destination: HubId) -> Option<&[HubId]> {
        self.paths.get(&(origin, destination)).map(Vec::as_slice)
    }

    pub fn feasible_paths(&self) -> &BTreeMap<(HubId, HubId), Vec<HubId>> {
        &self.paths
    }

    pub fn access_hubs(&self) -> impl Iterator<Item = HubId> + '_ {
        self.hub_ids().filter(|&h| self.hub(h).kind == HubKind::Access)
    }

    pub fn hub_ids(&self) -> impl Iterator<Item = HubId> {
        (0..self.hubs.len() as u16).map(HubId)
    }

    /// Name used for a route in logs and reports, e.g. `AH12-LH4`.
    pub fn route_name(&self, from: HubId, to: HubId) -> String {
        format!("{}-{}", self.name(from), self.name(to))
    }
}

pub fn build_network(spec: &NetworkSpec) -> Result<Network> {
    let mut hubs = Vec::with_capacity(spec.hubs.len());
    let mut by_id = HashMap::new();
    for h in &spec.hubs {
        if h.id.is_empty() || !h.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Config(format!(
                "hub id `{}` must be non-empty and alphanumeric",
                h.id
            )));
        }
        let id = HubId(hubs.len() as u16);
        if by_id.insert(h.id.clone(), id).is_some() {
            return Err(Error::Config(format!("duplicate hub id `{}`", h.id)));
        }
        hubs.push(Hub {
            id: h.id.clone(),
            kind: h.kind,
            label: h.label.clone().unwrap_or_else(|| h.id.clone()),
        });
    }
    let count = |kind| hubs.iter().filter(|h| h.kind == kind).count();
    if count(HubKind::Gateway) < 1 || count(HubKind::Local) < 1 || count(HubKind::Access) < 2 {
        return Err(Error::Config(
            "network needs at least one gateway, one local and two access hubs".into(),
        ));
    }

    let mut routes = Vec::with_capacity(spec.links.len() * 2);
    let mut route_index = HashMap::new();
    for link in &spec.links {
        let a = *by_id
            .get(&link.a)
            .ok_or_else(|| Error::UnknownHub(link.a.clone()))?;
        let b = *by_id
            .get(&link.b)
            .ok_or_else(|| Error::UnknownHub(link.b.clone()))?;
        if a == b {
            return Err(Error::Config(format!("link {} connects a hub to itself", link.a)));
        }
        if !(link.minutes > 0.0 && link.minutes.is_finite()) {
            return Err(Error::Config(format!(
                "link {}-{} needs positive travel minutes",
                link.a, link.b
            )));
        }
        let (ka, kb) = (hubs[a.index()].kind, hubs[b.index()].kind);
        if (ka == HubKind::Access && kb != HubKind::Local) || (kb == HubKind::Access && ka != HubKind::Local) {
            return Err(Error::Config(format!(
                "access hubs may only link to local hubs ({}-{})",
                link.a, link.b
            )));
        }
        for (from, to) in [(a, b), (b, a)] {
            if route_index.insert((from, to), routes.len()).is_some() {
                return Err(Error::Config(format!("duplicate link {}-{}", link.a, link.b)));
            }
            routes.push(Route { from, to, base_travel_minutes: link.minutes });
        }
    }

    let mut net = Network { hubs, routes, by_id, route_index, paths: BTreeMap::new() };
    let access: Vec<HubId> = net.access_hubs().collect();
    for &origin in &access {
        let tree = shortest_paths(&net, origin);
        for &destination in &access {
            if origin == destination {
                continue;
            }
            let path = tree[destination.index()].clone().ok_or_else(|| Error::Unreachable {
                origin: net.name(origin).to_string(),
                destination: net.name(destination).to_string(),
            })?;
            net.paths.insert((origin, destination), path);
        }
    }
    Ok(net)
}

#[derive(PartialEq)]
struct Label {
    cost: f64,
    names: Vec<String>,
    path: Vec<HubId>,
}

impl Eq for Label {}

impl Ord for Label {
    // Reversed so the max-heap pops the cheapest, lexicographically smallest label.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.names.cmp(&self.names))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over base travel minutes; ties go to the lexicographically smaller
/// sequence of hub ids.
fn shortest_paths(net: &Network, origin: HubId) -> Vec<Option<Vec<HubId>>> {
    let mut best: Vec<Option<Vec<HubId>>> = vec![None; net.hubs.len()];
    let mut heap = BinaryHeap::new();
    heap.push(Label {
        cost: 0.0,
        names: vec![net.name(origin).to_string()],
        path: vec![origin],
    });
    while let Some(label) = heap.pop() {
        let here = *label.path.last().expect("labels are non-empty");
        if best[here.index()].is_some() {
            continue;
        }
        best[here.index()] = Some(label.path.clone());
        for route in net.routes.iter().filter(|r| r.from == here) {
            if best[route.to.index()].is_some() || label.path.contains(&route.to) {
                continue;
            }
            let mut path = label.path.clone();
            path.push(route.to);
            let mut names = label.names.clone();
            names.push(net.name(route.to).to_string());
            heap.push(Label { cost: label.cost + route.base_travel_minutes, names, path });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_spec() -> NetworkSpec {
        NetworkSpec::from_toml(
            r#"
            [[hub]]
            id = "G"
            kind = "gateway"
            [[hub]]
            id = "L1"
            kind = "local"
            [[hub]]
            id = "L2"
            kind = "local"
            [[hub]]
            id = "A1"
            kind = "access"
            [[hub]]
            id = "A2"
            kind = "access"
            [[hub]]
            id = "A3"
            kind = "access"
            [[hub]]
            id = "A4"
            kind = "access"
            [[link]]
            a = "A1"
            b = "L1"
            minutes = 10
            [[link]]
            a = "A2"
            b = "L1"
            minutes = 12
            [[link]]
            a = "A3"
            b = "L2"
            minutes = 9
            [[link]]
            a = "A4"
            b = "L2"
            minutes = 15
            [[link]]
            a = "L1"
            b = "G"
            minutes = 20
            [[link]]
            a = "L2"
            b = "G"
            minutes = 25
            "#,
        )
        .unwrap()
    }

    #[test]
    fn tree_wiring_counts() {
        let net = build_network(&tree_spec()).unwrap();
        assert_eq!(net.hubs().len(), 7);
        assert_eq!(net.routes().len(), 12);
        assert_eq!(net.feasible_paths().len(), 12);
        let a1 = net.hub_id("A1").unwrap();
        let a4 = net.hub_id("A4").unwrap();
        let names: Vec<_> = net.path(a1, a4).unwrap().iter().map(|&h| net.name(h)).collect();
        assert_eq!(names, ["A1", "L1", "G", "L2", "A4"]);
    }

    #[test]
    fn unknown_hub_in_link() {
        let mut spec = tree_spec();
        spec.links[0].b = "L9".into();
        let err = build_network(&spec).unwrap_err();
        assert!(err.to_string().contains("unknown hub"), "{err}");
    }

    #[test]
    fn disconnected_pair_is_named() {
        let mut spec = tree_spec();
        spec.links.retain(|l| !(l.a == "L2" && l.b == "G"));
        match build_network(&spec).unwrap_err() {
            Error::Unreachable { origin, destination } => {
                assert_eq!(origin, "A1");
                assert_eq!(destination, "A3");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_too_few_hubs_and_bad_links() {
        let mut spec = tree_spec();
        spec.hubs.retain(|h| h.kind != HubKind::Gateway);
        spec.links.retain(|l| l.b != "G");
        assert!(matches!(build_network(&spec), Err(Error::Config(_))));

        let mut spec = tree_spec();
        spec.links.push(LinkSpec { a: "A1".into(), b: "G".into(), minutes: 5.0 });
        assert!(matches!(build_network(&spec), Err(Error::Config(_))));

        let mut spec = tree_spec();
        spec.links[0].minutes = 0.0;
        assert!(matches!(build_network(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn ties_break_on_hub_ids() {
        // Two equally long ways from A1 to A3: through L1 or through L2.
        let spec = NetworkSpec::from_toml(
            r#"
            [[hub]]
            id = "G"
            kind = "gateway"
            [[hub]]
            id = "L2"
            kind = "local"
            [[hub]]
            id = "L1"
            kind = "local"
            [[hub]]
            id = "A1"
            kind = "access"
            [[hub]]
            id = "A3"
            kind = "access"
            [[link]]
            a = "A1"
            b = "L1"
            minutes = 10
            [[link]]
            a = "A1"
            b = "L2"
            minutes = 10
            [[link]]
            a = "L1"
            b = "A3"
            minutes = 10
            [[link]]
            a = "L2"
            b = "A3"
            minutes = 10
            [[link]]
            a = "L1"
            b = "G"
            minutes = 10
            "#,
        )
        .unwrap();
        let net = build_network(&spec).unwrap();
        let (a1, a3) = (net.hub_id("A1").unwrap(), net.hub_id("A3").unwrap());
        let names: Vec<_> = net.path(a1, a3).unwrap().iter().map(|&h| net.name(h)).collect();
        assert_eq!(names, ["A1", "L1", "A3"]);
    }

    #[test]
    fn demo_paths_pass_through_a_local_hub() {
        let net = build_network(&NetworkSpec::demo()).unwrap();
        // Independent breadth-first reachability check over the routes.
        let access: Vec<_> = net.access_hubs().collect();
        for &o in &access {
            for &d in &access {
                if o == d {
                    continue;
                }
                let path = net.path(o, d).expect("pair covered");
                assert_eq!((path[0], *path.last().unwrap()), (o, d));
                assert!(path[1..path.len() - 1]
                    .iter()
                    .any(|&h| net.hub(h).kind == HubKind::Local));
                for w in path.windows(2) {
                    assert!(net.route(w[0], w[1]).is_some());
                }
                let mut seen = path.to_vec();
                seen.sort();
                seen.dedup();
                assert_eq!(seen.len(), path.len(), "path revisits a hub");
            }
        }
    }
}
