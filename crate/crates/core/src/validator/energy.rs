use thiserror::Error;

use crate::deck::{split_port, BlockRegistry, ComponentRole, InputDeck};

use super::rules::components;
use super::{Code, Finding};

/// Default allowed deviation of a declared outlet temperature, as a
/// fraction of the estimated temperature rise.
pub const DEFAULT_ENERGY_THRESHOLD: f64 = 0.2;

/// Smallest temperature rise used as the deviation scale, in K, so that
/// near-adiabatic cases are not judged on a vanishing denominator.
const MIN_RISE_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyInputs {
    /// Heat added to the fluid, W.
    pub power: f64,
    /// kg/m³
    pub density: f64,
    /// m/s
    pub velocity: f64,
    /// Flow area, m².
    pub area: f64,
    /// J/(kg·K)
    pub cp: f64,
    /// Inlet temperature, K.
    pub t_in: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("non-physical input: {quantity} = {value} must be positive and finite")]
pub struct NonPhysicalInput {
    pub quantity: &'static str,
    pub value: f64,
}

/// Bulk outlet temperature from a steady energy balance:
/// `T_out = T_in + Q / (ρ v A c_p)`.
pub fn energy_balance_estimate(x: &EnergyInputs) -> Result<f64, NonPhysicalInput> {
    for (quantity, value) in [
        ("density", x.density),
        ("velocity", x.velocity),
        ("area", x.area),
        ("cp", x.cp),
        ("t_in", x.t_in),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(NonPhysicalInput { quantity, value });
        }
    }
    if !x.power.is_finite() {
        return Err(NonPhysicalInput {
            quantity: "power",
            value: x.power,
        });
    }
    let mass_flow = x.density * x.velocity * x.area;
    Ok(x.t_in + x.power / (mass_flow * x.cp))
}

fn number(block: &crate::deck::Block, keys: &[&str]) -> Option<f64> {
    keys.iter().find_map(|k| block.param(k)?.value.as_f64())
}

/// Pulls the energy-balance quantities out of a deck.
///
/// The check applies when a `Postprocessors` entry declares
/// `expected_T_out`. Inlet velocity and temperature come from the first
/// `PBTDJ` (`v_bc`, `T_bc`), the flow area from the component it feeds,
/// density and heat capacity from that component's EOS (`rho` or `rho_0`,
/// `cp`), and the power from the sum of component `power` or
/// `initial_power` values (zero when absent).
///
/// Returns the inputs, the declared outlet temperature and its deck path.
pub fn extract_energy_inputs(deck: &InputDeck, registry: &BlockRegistry) -> Option<(EnergyInputs, f64, String)> {
    let (location, declared) = deck
        .params_with_paths()
        .into_iter()
        .filter(|(path, p)| path.starts_with("Postprocessors/") && p.key == "expected_T_out")
        .find_map(|(path, p)| Some((path, p.value.as_f64()?)))?;

    let comps = components(deck);
    let inlet = comps.iter().find(|c| c.type_name() == Some("PBTDJ"))?;
    let velocity = number(inlet, &["v_bc"])?;
    let t_in = number(inlet, &["T_bc"])?;
    let fed = inlet.param("input")?.value.tokens().first().copied()?;
    let fed = split_port(fed).map_or(fed, |(n, _)| n);
    let fed = comps.iter().find(|c| c.name == fed)?;
    let area = number(fed, &["A"])?;
    let eos_name = fed
        .param("eos")
        .or_else(|| deck.block("GlobalParams")?.param("eos"))?
        .value
        .tokens()
        .first()
        .copied()?;
    let eos = deck.block("EOS")?.child(eos_name)?;
    let density = number(eos, &["rho", "rho_0"])?;
    let cp = number(eos, &["cp"])?;
    let power = comps
        .iter()
        .filter(|c| c.type_name().is_some_and(|t| !registry.roles(t).contains(&ComponentRole::Junction)))
        .filter_map(|c| number(c, &["power", "initial_power"]))
        .sum();
    Some((
        EnergyInputs {
            power,
            density,
            velocity,
            area,
            cp,
            t_in,
        },
        declared,
        location,
    ))
}

pub(super) fn check_energy(deck: &InputDeck, registry: &BlockRegistry, threshold: f64, out: &mut Vec<Finding>) {
    let Some((inputs, declared, location)) = extract_energy_inputs(deck, registry) else {
        return;
    };
    let Ok(estimate) = energy_balance_estimate(&inputs) else {
        return;
    };
    let scale = (estimate - inputs.t_in).abs().max(MIN_RISE_SCALE);
    let deviation = (declared - estimate).abs() / scale;
    if deviation > threshold {
        out.push(Finding::new(
            Code::EnergyImbalance,
            location,
            format!(
                "declared outlet temperature {declared} K differs from the energy balance estimate {estimate:.3} K by {:.1}% of the rise",
                deviation * 100.0
            ),
        ));
    }
}
