//! Machine-readable optimization taxonomy and run-profile validation.
//!
//! The bundled catalog (`data/catalog.toml`) lists six families and 22
//! techniques. Only techniques flagged `implemented` have an executable pass;
//! the others are kept so the taxonomy stays browsable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::metrics::MetricKind;
use crate::scene::WhiskerSelection;

/// Raw text of the bundled catalog file.
pub const CATALOG_TOML: &str = include_str!("../data/catalog.toml");

/// Technique ids with executable passes.
pub mod technique {
    pub const FRUSTUM_CULLING: &str = "frustum_culling";
    pub const DISTANCE_CULLING: &str = "distance_culling";
    pub const OCCLUSION_CULLING: &str = "occlusion_culling";
    pub const LOD: &str = "lod";
    pub const INSTANCING: &str = "instancing";
    pub const LEVEL_STREAMING: &str = "level_streaming";
    pub const WHISKER: &str = "whisker";
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("invalid argument: unknown family '{0}'")]
    UnknownFamily(String),
    #[error("unknown technique '{0}'")]
    UnknownTechnique(String),
    #[error("technique '{0}' is not implemented")]
    NotImplemented(String),
    #[error("parameter '{name}': {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("catalog data: {0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    Rendering,
    Shadow,
    Data,
    Geometry,
    Cpu,
    Engine,
}

impl FamilyId {
    pub const ALL: [FamilyId; 6] = [
        FamilyId::Rendering,
        FamilyId::Shadow,
        FamilyId::Data,
        FamilyId::Geometry,
        FamilyId::Cpu,
        FamilyId::Engine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyId::Rendering => "rendering",
            FamilyId::Shadow => "shadow",
            FamilyId::Data => "data",
            FamilyId::Geometry => "geometry",
            FamilyId::Cpu => "cpu",
            FamilyId::Engine => "engine",
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| CatalogError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationFamily {
    pub id: FamilyId,
    pub display_name: String,
    /// Linear RGB in `[0, 1]`.
    pub color: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Distance,
    DistanceList,
    Cells,
    Pixels,
    Count,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub default: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueDescriptor {
    pub id: String,
    pub family: FamilyId,
    pub display_name: String,
    pub description: String,
    pub implemented: bool,
    /// Expected impact per metric, -2 (worsens) to +2 (improves).
    pub radar: BTreeMap<MetricKind, i8>,
    #[serde(default, rename = "params")]
    pub parameters_schema: Vec<ParamSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub version: u32,
    #[serde(rename = "family")]
    pub families: Vec<OptimizationFamily>,
    #[serde(rename = "technique")]
    pub techniques: Vec<TechniqueDescriptor>,
}

impl Catalog {
    /// The catalog bundled with the binary, parsed once.
    pub fn builtin() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| {
            Catalog::from_toml_str(CATALOG_TOML).expect("bundled catalog is well-formed")
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Catalog, CatalogError> {
        let mut catalog: Catalog =
            toml::from_str(text).map_err(|e| CatalogError::Data(e.to_string()))?;
        catalog.check()?;
        // Stable family order, then file order within a family.
        let rank = |f: FamilyId| FamilyId::ALL.iter().position(|x| *x == f).unwrap();
        catalog.families.sort_by_key(|f| rank(f.id));
        catalog.techniques.sort_by_key(|t| rank(t.family));
        Ok(catalog)
    }

    fn check(&self) -> Result<(), CatalogError> {
        let fams: BTreeSet<FamilyId> = self.families.iter().map(|f| f.id).collect();
        if fams.len() != FamilyId::ALL.len() || self.families.len() != FamilyId::ALL.len() {
            return Err(CatalogError::Data("expected exactly six families".into()));
        }
        for f in &self.families {
            if f.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(CatalogError::Data(format!("family {} color out of range", f.id)));
            }
        }
        let mut ids = BTreeSet::new();
        for t in &self.techniques {
            if !ids.insert(t.id.as_str()) {
                return Err(CatalogError::Data(format!("duplicate technique id {}", t.id)));
            }
            if t.radar.len() != MetricKind::ALL.len() || t.radar.values().any(|v| !(-2..=2).contains(v)) {
                return Err(CatalogError::Data(format!("technique {} radar malformed", t.id)));
            }
        }
        Ok(())
    }

    pub fn family(&self, id: FamilyId) -> &OptimizationFamily {
        self.families.iter().find(|f| f.id == id).expect("catalog has every family")
    }

    pub fn technique(&self, id: &str) -> Option<&TechniqueDescriptor> {
        self.techniques.iter().find(|t| t.id == id)
    }

    /// Techniques in family order, filtered conjunctively.
    pub fn list_techniques(
        &self,
        family_filter: Option<&str>,
        implemented_only: bool,
    ) -> Result<Vec<&TechniqueDescriptor>, CatalogError> {
        let family = family_filter.map(FamilyId::from_str).transpose()?;
        Ok(self
            .techniques
            .iter()
            .filter(|t| family.is_none_or(|f| t.family == f))
            .filter(|t| !implemented_only || t.implemented)
            .collect())
    }

    pub fn family_color(&self, family: &str) -> Result<[f64; 3], CatalogError> {
        let id = FamilyId::from_str(family)?;
        Ok(self.family(id).color)
    }

    /// Checks a candidate profile against the catalog and fills defaults for
    /// every enabled technique's parameters.
    pub fn validate_profile(&self, candidate: RunProfile) -> Result<ValidatedProfile, CatalogError> {
        let mut params = serde_json::to_value(&candidate.params)
            .map_err(|e| CatalogError::Data(e.to_string()))?;
        let map = params.as_object_mut().expect("params serialize to an object");

        for id in &candidate.enabled {
            let t = self
                .technique(id)
                .ok_or_else(|| CatalogError::UnknownTechnique(id.clone()))?;
            if !t.implemented {
                return Err(CatalogError::NotImplemented(id.clone()));
            }
            for spec in &t.parameters_schema {
                if !map.contains_key(&spec.name) {
                    map.insert(spec.name.clone(), spec.default.clone());
                }
            }
        }

        for t in &self.techniques {
            for spec in &t.parameters_schema {
                if let Some(v) = map.get(&spec.name) {
                    check_param(spec, v)?;
                }
            }
        }

        let params: ProfileParams = serde_json::from_value(params).map_err(|e| {
            CatalogError::InvalidParameter { name: "params".into(), reason: e.to_string() }
        })?;
        Ok(ValidatedProfile(RunProfile { name: candidate.name, enabled: candidate.enabled, params }))
    }
}

fn invalid(spec: &ParamSpec, reason: impl Into<String>) -> CatalogError {
    CatalogError::InvalidParameter { name: spec.name.clone(), reason: reason.into() }
}

fn check_range(spec: &ParamSpec, x: f64, exclusive_min: bool) -> Result<(), CatalogError> {
    if !x.is_finite() {
        return Err(invalid(spec, "must be finite"));
    }
    if let Some(min) = spec.min {
        if x < min || (exclusive_min && x == min) {
            return Err(invalid(spec, format!("{x} below minimum {min}")));
        }
    }
    if let Some(max) = spec.max {
        if x > max {
            return Err(invalid(spec, format!("{x} above maximum {max}")));
        }
    }
    Ok(())
}

fn check_param(spec: &ParamSpec, v: &Value) -> Result<(), CatalogError> {
    let integer = |v: &Value| v.as_u64().ok_or_else(|| invalid(spec, "expected a non-negative integer"));
    match spec.kind {
        ParamKind::Distance => {
            let x = v.as_f64().ok_or_else(|| invalid(spec, "expected a number"))?;
            check_range(spec, x, true)
        }
        ParamKind::DistanceList => {
            let xs = v.as_array().ok_or_else(|| invalid(spec, "expected a list"))?;
            if xs.is_empty() {
                return Err(invalid(spec, "must not be empty"));
            }
            let mut prev = f64::NEG_INFINITY;
            for x in xs {
                let x = x.as_f64().ok_or_else(|| invalid(spec, "expected numbers"))?;
                check_range(spec, x, true)?;
                if x <= prev {
                    return Err(invalid(spec, "not ascending"));
                }
                prev = x;
            }
            Ok(())
        }
        ParamKind::Cells | ParamKind::Count => check_range(spec, integer(v)? as f64, false),
        ParamKind::Pixels => {
            let n = integer(v)?;
            check_range(spec, n as f64, false)?;
            if !n.is_power_of_two() {
                return Err(invalid(spec, "must be a power of two"));
            }
            Ok(())
        }
        ParamKind::Interval => {
            let lo = v.get("lo").and_then(Value::as_f64);
            let hi = v.get("hi").and_then(Value::as_f64);
            let (Some(lo), Some(hi)) = (lo, hi) else {
                return Err(invalid(spec, "expected {lo, hi}"));
            };
            check_range(spec, lo, false)?;
            check_range(spec, hi, false)?;
            if lo > hi {
                return Err(invalid(spec, "lo must not exceed hi"));
            }
            Ok(())
        }
    }
}

/// Parameter values for the executable techniques. Absent values are filled
/// from catalog defaults when the owning technique is enabled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_draw_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lod_thresholds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streaming_radius: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion_resolution: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occluder_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whisker: Option<WhiskerSelection>,
}

/// The experimental variable of every run: which techniques are on, and how.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunProfile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub enabled: BTreeSet<String>,
    #[serde(default)]
    pub params: ProfileParams,
}

impl RunProfile {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn with(mut self, technique: &str) -> Self {
        self.enabled.insert(technique.to_string());
        self
    }
}

/// A profile that passed [`Catalog::validate_profile`]; every enabled
/// technique has its parameters set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedProfile(RunProfile);

impl ValidatedProfile {
    /// The empty (baseline) profile.
    pub fn baseline() -> Self {
        ValidatedProfile(RunProfile::new("baseline"))
    }

    pub fn profile(&self) -> &RunProfile {
        &self.0
    }

    pub fn into_inner(self) -> RunProfile {
        self.0
    }

    pub fn is_enabled(&self, technique: &str) -> bool {
        self.0.enabled.contains(technique)
    }

    /// Enabled technique ids in sorted order.
    pub fn enabled_ids(&self) -> Vec<String> {
        self.0.enabled.iter().cloned().collect()
    }

    pub fn max_draw_distance(&self) -> f64 {
        self.0.params.max_draw_distance.unwrap_or(f64::INFINITY)
    }

    pub fn lod_thresholds(&self) -> &[f64] {
        self.0.params.lod_thresholds.as_deref().unwrap_or(&[])
    }

    pub fn streaming_radius(&self) -> u32 {
        self.0.params.streaming_radius.unwrap_or(0)
    }

    pub fn occlusion_resolution(&self) -> u32 {
        self.0.params.occlusion_resolution.unwrap_or(64)
    }

    pub fn occluder_count(&self) -> usize {
        self.0.params.occluder_count.unwrap_or(64) as usize
    }

    pub fn whisker(&self) -> Option<WhiskerSelection> {
        self.0.params.whisker
    }
}

/// Validates against the bundled catalog.
pub fn validate_profile(candidate: RunProfile) -> Result<ValidatedProfile, CatalogError> {
    Catalog::builtin().validate_profile(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> &'static Catalog {
        Catalog::builtin()
    }

    #[test]
    fn family_counts_match_taxonomy() {
        let counts: Vec<usize> = FamilyId::ALL
            .iter()
            .map(|f| cat().list_techniques(Some(f.as_str()), false).unwrap().len())
            .collect();
        assert_eq!(counts, vec![5, 2, 2, 6, 2, 5]);
        assert_eq!(cat().techniques.len(), 22);
    }

    #[test]
    fn geometry_and_shadow_filters() {
        assert_eq!(cat().list_techniques(Some("geometry"), false).unwrap().len(), 6);
        assert_eq!(cat().list_techniques(Some("shadow"), false).unwrap().len(), 2);
        assert!(matches!(
            cat().list_techniques(Some("lighting"), false),
            Err(CatalogError::UnknownFamily(_))
        ));
    }

    #[test]
    fn implemented_set_is_the_executable_subset() {
        let ids: BTreeSet<&str> = cat()
            .list_techniques(None, true)
            .unwrap()
            .into_iter()
            .map(|t| t.id.as_str())
            .collect();
        let expected: BTreeSet<&str> = [
            "frustum_culling",
            "distance_culling",
            "occlusion_culling",
            "lod",
            "instancing",
            "level_streaming",
            "whisker",
        ]
        .into_iter()
        .collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn listing_is_in_family_order() {
        let all = cat().list_techniques(None, false).unwrap();
        let ranks: Vec<usize> = all
            .iter()
            .map(|t| FamilyId::ALL.iter().position(|f| *f == t.family).unwrap())
            .collect();
        assert!(ranks.windows(2).all(|w| w[0] <= w[1]));
        let geo = cat().list_techniques(Some("geometry"), true).unwrap();
        assert!(geo.iter().all(|t| t.family == FamilyId::Geometry && t.implemented));
    }

    #[test]
    fn family_colors_exact() {
        assert_eq!(cat().family_color("rendering").unwrap(), [0.996, 0.851, 0.412]);
        assert_eq!(cat().family_color("shadow").unwrap(), [0.431, 0.906, 0.824]);
        assert_eq!(cat().family_color("data").unwrap(), [0.706, 0.949, 0.733]);
        assert_eq!(cat().family_color("geometry").unwrap(), [0.839, 0.710, 1.0]);
        assert_eq!(cat().family_color("cpu").unwrap(), [0.984, 0.780, 0.714]);
        assert_eq!(cat().family_color("engine").unwrap(), [0.929, 0.929, 0.929]);
        assert!(cat().family_color("nope").is_err());
    }

    #[test]
    fn empty_profile_is_valid_baseline() {
        let p = validate_profile(RunProfile::new("baseline")).unwrap();
        assert!(p.profile().enabled.is_empty());
        assert_eq!(p.profile().params, ProfileParams::default());
    }

    #[test]
    fn catalog_only_technique_rejected() {
        let err = validate_profile(RunProfile::new("x").with("nanite")).unwrap_err();
        assert_eq!(err, CatalogError::NotImplemented("nanite".into()));
        assert!(err.to_string().contains("not implemented"));
        let err = validate_profile(RunProfile::new("x").with("warp_drive")).unwrap_err();
        assert!(matches!(err, CatalogError::UnknownTechnique(_)));
    }

    #[test]
    fn descending_thresholds_rejected() {
        let mut p = RunProfile::new("x").with("lod");
        p.params.lod_thresholds = Some(vec![50.0, 20.0]);
        let err = validate_profile(p).unwrap_err();
        assert!(err.to_string().contains("not ascending"), "{err}");
    }

    #[test]
    fn out_of_schema_values_rejected() {
        let mut p = RunProfile::new("x").with("occlusion_culling");
        p.params.occlusion_resolution = Some(48);
        assert!(validate_profile(p).is_err());
        let mut p = RunProfile::new("x").with("occlusion_culling");
        p.params.occlusion_resolution = Some(512);
        assert!(validate_profile(p).is_err());
        let mut p = RunProfile::new("x").with("distance_culling");
        p.params.max_draw_distance = Some(0.0);
        assert!(validate_profile(p).is_err());
        let mut p = RunProfile::new("x");
        p.params.whisker = Some(WhiskerSelection { lo: 0.9, hi: 0.1 });
        assert!(validate_profile(p).is_err());
    }

    #[test]
    fn defaults_filled_for_enabled_techniques() {
        let p = validate_profile(
            RunProfile::new("x").with("lod").with("level_streaming").with("occlusion_culling"),
        )
        .unwrap();
        assert_eq!(p.lod_thresholds(), &[60.0, 120.0, 240.0]);
        assert_eq!(p.streaming_radius(), 2);
        assert_eq!(p.occlusion_resolution(), 64);
        assert!(p.profile().params.max_draw_distance.is_none());
    }

    #[test]
    fn every_implemented_technique_validates() {
        for t in cat().list_techniques(None, true).unwrap() {
            validate_profile(RunProfile::new("x").with(&t.id)).unwrap();
        }
    }

    #[test]
    fn validation_is_idempotent() {
        let mut all = RunProfile::new("all");
        for t in cat().list_techniques(None, true).unwrap() {
            all.enabled.insert(t.id.clone());
        }
        for p in [RunProfile::new("b"), RunProfile::new("l").with("lod"), all] {
            let once = validate_profile(p).unwrap();
            let twice = validate_profile(once.clone().into_inner()).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn profile_json_rejects_unknown_params() {
        let bad = r#"{"name":"x","enabled":[],"params":{"warp":1}}"#;
        assert!(serde_json::from_str::<RunProfile>(bad).is_err());
    }
}
