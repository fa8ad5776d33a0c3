use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::seed::{keyed_uniform, SeedSpec};
use super::SimError;
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(center: Point, radius: f64, angle: f64) -> Self {
        Self {
            x: center.x + radius * angle.cos(),
            y: center.y + radius * angle.sin(),
        }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Direction of `other` as seen from `self`, radians.
    pub fn bearing_to(self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Wrap an angle difference into `(-π, π]`.
fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

fn within_beam(boresight: f64, bearing: f64, phi: f64) -> bool {
    phi >= TAU || wrap_angle(bearing - boresight).abs() < phi / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub position: Point,
    /// Cycle offset ν in `0..M`; radar pulses go out at slots `ν + nM`.
    pub mark: u32,
    /// Beam direction, radians in `[0, 2π)`, pointing at the node's receiver.
    pub boresight: f64,
    /// Key of the node's per-slot ALOHA draws.
    pub aloha_key: u64,
}

impl Node {
    pub fn receiver_position(&self, dc: f64) -> Point {
        Point::polar(self.position, dc, self.boresight)
    }
}

/// A receiver whose interference is measured: a position plus the beam it
/// listens on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer {
    pub position: Point,
    pub boresight: f64,
}

impl Observer {
    pub fn typical(boresight: f64) -> Self {
        Self {
            position: Point::ORIGIN,
            boresight,
        }
    }

    /// True when each of the two beams covers the other end.
    pub fn mutually_aligned(&self, node: &Node, phi: f64) -> bool {
        within_beam(self.boresight, self.position.bearing_to(node.position), phi)
            && within_beam(node.boresight, node.position.bearing_to(self.position), phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    RadarPulse,
    Comm,
}

/// What `node` transmits in absolute slot `slot`, if anything.
pub fn node_activity(node: &Node, p: &SystemParams, slot: u64) -> Option<Activity> {
    let m = u64::from(p.cycle_slots());
    let phase = (slot % m + m - u64::from(node.mark)) % m;
    if phase == 0 {
        Some(Activity::RadarPulse)
    } else if phase >= u64::from(p.radar_slots()) && keyed_uniform(node.aloha_key, slot) < p.qc() {
        Some(Activity::Comm)
    } else {
        None
    }
}

/// One sampled node field around an observation point.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub nodes: Vec<Node>,
    pub window_radius: f64,
    pub lambda: f64,
    /// Center of the circular sampling window.
    pub center: Point,
    /// The typical node: at the origin with mark 0. Never part of `nodes`.
    pub typical: Observer,
    /// Set when `nodes` only holds the nodes mutually aligned with this
    /// observer (see [`sample_aligned_view`]).
    pub aligned_to: Option<Observer>,
}

/// Smallest window accepted for density `lambda`: five times the mean
/// nearest-aligned-interferer distance `1/(2√λ_a)`.
pub fn min_window_radius(p: &SystemParams, lambda: f64) -> f64 {
    let aligned = p.alignment_probability() * lambda;
    if aligned > 0.0 {
        2.5 / aligned.sqrt()
    } else {
        0.0
    }
}

/// Default window `20/√(π λ_a)`.
pub fn default_window_radius(p: &SystemParams, lambda: f64) -> f64 {
    let aligned = p.alignment_probability() * lambda;
    if aligned > 0.0 {
        20.0 / (PI * aligned).sqrt()
    } else {
        1.0
    }
}

fn check_window(p: &SystemParams, lambda: f64, window_radius: f64) -> Result<(), SimError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(SimError::NegativeDensity(lambda));
    }
    let min = min_window_radius(p, lambda);
    if !(window_radius > 0.0) || window_radius < min {
        return Err(SimError::WindowTooSmall {
            radius: window_radius,
            min,
        });
    }
    Ok(())
}

/// Radii of a PPP with `intensity` in a disc, in increasing order.
///
/// `π r²` of successive points has Exp(λ) increments, so the count is
/// Poisson(λπR²) and positions are uniform once angles are added. Growing
/// the window keeps every inner point (and its attributes) unchanged.
fn for_each_radius(
    rng: &mut ChaCha8Rng,
    intensity: f64,
    radius: f64,
    mut visit: impl FnMut(&mut ChaCha8Rng, f64),
) {
    if !(intensity > 0.0) {
        return;
    }
    let scale = 1.0 / (intensity * PI);
    let mut area = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        area += gap;
        let r = (area * scale).sqrt();
        if r > radius {
            break;
        }
        visit(rng, r);
    }
}

fn draw_typical(rng: &mut ChaCha8Rng) -> Observer {
    Observer::typical(rng.random::<f64>() * TAU)
}

/// Full realization of the node PPP in a disc around the origin.
pub fn sample_network(
    p: &SystemParams,
    lambda: f64,
    window_radius: f64,
    seed: SeedSpec,
) -> Result<NetworkRealization, SimError> {
    check_window(p, lambda, window_radius)?;
    let mut rng = seed.rng();
    let typical = draw_typical(&mut rng);
    let m = p.cycle_slots();
    let mut nodes = Vec::new();
    for_each_radius(&mut rng, lambda, window_radius, |rng, r| {
        let angle = rng.random::<f64>() * TAU;
        nodes.push(Node {
            position: Point::polar(Point::ORIGIN, r, angle),
            boresight: rng.random::<f64>() * TAU,
            mark: rng.random_range(0..m),
            aloha_key: rng.random(),
        });
    });
    Ok(NetworkRealization {
        nodes,
        window_radius,
        lambda,
        center: Point::ORIGIN,
        typical,
        aligned_to: None,
    })
}

/// Realization restricted to the nodes mutually aligned with `observer`,
/// in a window centered on it.
///
/// A node lies in the observer's beam with probability φ/2π and points back
/// at it with an independent probability φ/2π, so the retained nodes are a
/// PPP of intensity `λ_a = (φ/2π)² λ`: uniform angle inside the observer's
/// beam and boresight within φ/2 of the bearing back to the observer.
/// Interference at `observer` has the same law as with [`sample_network`],
/// at a fraction `λ_a/λ` of the cost.
pub fn sample_aligned_view(
    p: &SystemParams,
    lambda: f64,
    window_radius: f64,
    observer: Observer,
    typical: Observer,
    rng: &mut ChaCha8Rng,
) -> Result<NetworkRealization, SimError> {
    check_window(p, lambda, window_radius)?;
    let phi = p.phi().min(TAU);
    let m = p.cycle_slots();
    let mut nodes = Vec::new();
    for_each_radius(
        rng,
        p.alignment_probability() * lambda,
        window_radius,
        |rng, r| {
            let angle = observer.boresight + (rng.random::<f64>() - 0.5) * phi;
            let back = angle + PI + (rng.random::<f64>() - 0.5) * phi;
            nodes.push(Node {
                position: Point::polar(observer.position, r, angle),
                boresight: back.rem_euclid(TAU),
                mark: rng.random_range(0..m),
                aloha_key: rng.random(),
            });
        },
    );
    Ok(NetworkRealization {
        nodes,
        window_radius,
        lambda,
        center: observer.position,
        typical,
        aligned_to: Some(observer),
    })
}

/// Nodes mutually aligned with the typical node and transmitting in `slot`.
pub fn active_aligned_interferers<'a>(
    net: &'a NetworkRealization,
    p: &SystemParams,
    slot: u64,
) -> Vec<(&'a Node, Activity)> {
    active_aligned_interferers_at(net, p, slot, &net.typical)
}

pub fn active_aligned_interferers_at<'a>(
    net: &'a NetworkRealization,
    p: &SystemParams,
    slot: u64,
    observer: &Observer,
) -> Vec<(&'a Node, Activity)> {
    net.nodes
        .iter()
        .filter(|n| observer.mutually_aligned(n, p.phi()))
        .filter_map(|n| node_activity(n, p, slot).map(|a| (n, a)))
        .collect()
}

fn received_power(p: &SystemParams, k: f64, from: Point, at: Point) -> Result<f64, SimError> {
    let d = from.distance(at);
    if d == 0.0 {
        return Err(SimError::CoincidentNode);
    }
    Ok(if p.alpha() == 4.0 {
        let d2 = d * d;
        k / (d2 * d2)
    } else {
        k * d.powf(-p.alpha())
    })
}

/// Aggregate interference `Σ K ‖x_i - o‖^{-α}` at `observer` in `slot`.
pub fn slot_interference(
    net: &NetworkRealization,
    p: &SystemParams,
    slot: u64,
    observer: &Observer,
) -> Result<f64, SimError> {
    let k = p.path_constant();
    let mut total = 0.0;
    for (node, _) in active_aligned_interferers_at(net, p, slot, observer) {
        total += received_power(p, k, node.position, observer.position)?;
    }
    Ok(total)
}

/// Interference seen by the typical radar in each echo slot `1..M_r`.
pub fn echo_window_profile(
    net: &NetworkRealization,
    p: &SystemParams,
) -> Result<Vec<f64>, SimError> {
    let window = (p.radar_slots() - 1) as usize;
    let mut profile = vec![0.0; window];
    let observer = net.typical;
    let k = p.path_constant();
    let m = p.cycle_slots();
    let mr = p.radar_slots();
    for node in net
        .nodes
        .iter()
        .filter(|n| observer.mutually_aligned(n, p.phi()))
    {
        let mut power = None;
        // Same rule as `node_activity`, with the phase advanced in step.
        let mut phase = (1 + m - node.mark) % m;
        for (i, slot) in (1..=window as u64).enumerate() {
            let active =
                phase == 0 || (phase >= mr && keyed_uniform(node.aloha_key, slot) < p.qc());
            if active {
                let w = match power {
                    Some(w) => w,
                    None => *power.insert(received_power(p, k, node.position, observer.position)?),
                };
                profile[i] += w;
            }
            phase += 1;
            if phase == m {
                phase = 0;
            }
        }
    }
    Ok(profile)
}

/// Largest single-slot interference over the typical radar's echo window.
pub fn echo_window_max(net: &NetworkRealization, p: &SystemParams) -> Result<f64, SimError> {
    Ok(echo_window_profile(net, p)?.into_iter().fold(0.0, f64::max))
}

pub(crate) fn draw_typical_observer(rng: &mut ChaCha8Rng) -> Observer {
    draw_typical(rng)
}
