/// Requirements attached to one top-level block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRule {
    pub name: String,
    pub required_params: Vec<String>,
    /// Minimum number of sub-blocks (e.g. at least one component).
    pub min_children: usize,
}

/// Role a component plays in a flow network, derived from its `type`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentRole {
    /// 1-D flow element with position, orientation and length.
    Flow,
    /// Zero-dimensional connector between component ends.
    Junction,
    /// Prescribed velocity or mass flow at an inlet.
    KinematicBoundary,
    /// Prescribed pressure at an outlet.
    PressureBoundary,
    /// Anything else (heat structures, reactor power, ...).
    Other,
}

/// Single source of truth for the required deck structure and the
/// component vocabulary used by the validator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRegistry {
    rules: Vec<BlockRule>,
    aliases: Vec<(String, String)>,
    flow_types: Vec<String>,
    junction_types: Vec<String>,
    kinematic_types: Vec<String>,
    pressure_types: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for BlockRegistry {
    fn default() -> Self {
        let rule = |name: &str, params: &[&str], min_children| BlockRule {
            name: name.to_string(),
            required_params: strings(params),
            min_children,
        };
        Self {
            rules: vec![
                rule("GlobalParams", &["global_init_P", "global_init_T"], 0),
                rule("EOS", &[], 1),
                rule("Components", &[], 1),
                rule("MaterialProperties", &[], 0),
                rule("Functions", &[], 0),
                rule("Executioner", &["type"], 0),
                rule("Preconditioning", &[], 1),
                rule("Outputs", &[], 0),
                rule("Postprocessors", &[], 0),
            ],
            aliases: [
                ("global parameters", "GlobalParams"),
                ("global params", "GlobalParams"),
                ("equation of state", "EOS"),
                ("eos", "EOS"),
                ("components", "Components"),
                ("material properties", "MaterialProperties"),
                ("materials properties", "MaterialProperties"),
                ("materials", "MaterialProperties"),
                ("functions", "Functions"),
                ("executioner", "Executioner"),
                ("preconditioning", "Preconditioning"),
                ("outputs", "Outputs"),
                ("postprocessors", "Postprocessors"),
            ]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
            flow_types: strings(&[
                "PBOneDFluidComponent",
                "PBPipe",
                "PBCoreChannel",
                "PBHeatExchanger",
                "PBPump",
            ]),
            junction_types: strings(&[
                "PBBranch",
                "PBSingleJunction",
                "PBVolumeBranch",
                "PBLiquidVolume",
            ]),
            kinematic_types: strings(&["PBTDJ", "PBPump"]),
            pressure_types: strings(&["PBTDV", "PBLiquidVolume"]),
        }
    }
}

impl BlockRegistry {
    /// Names of the required top-level blocks, in canonical order.
    pub fn required_blocks(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.name.as_str())
    }

    pub fn rules(&self) -> &[BlockRule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&BlockRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn is_required(&self, name: &str) -> bool {
        self.rule(name).is_some()
    }

    /// Maps prose names ("equation of state") and exact block names to the
    /// canonical block name. Exact names match case-sensitively.
    pub fn canonical_name(&self, name: &str) -> Option<&str> {
        if let Some(r) = self.rule(name) {
            return Some(&r.name);
        }
        let wanted = name.trim().to_lowercase();
        self.aliases
            .iter()
            .find(|(alias, _)| *alias == wanted)
            .map(|(_, canon)| canon.as_str())
    }

    /// Roles a component type plays. Pumps are both flow elements and
    /// kinematic drivers; liquid volumes are junctions that fix pressure.
    pub fn roles(&self, type_name: &str) -> Vec<ComponentRole> {
        let mut roles = Vec::new();
        let has = |v: &[String]| v.iter().any(|t| t == type_name);
        if has(&self.flow_types) {
            roles.push(ComponentRole::Flow);
        }
        if has(&self.junction_types) {
            roles.push(ComponentRole::Junction);
        }
        if has(&self.kinematic_types) {
            roles.push(ComponentRole::KinematicBoundary);
        }
        if has(&self.pressure_types) {
            roles.push(ComponentRole::PressureBoundary);
        }
        if roles.is_empty() {
            roles.push(ComponentRole::Other);
        }
        roles
    }
}
