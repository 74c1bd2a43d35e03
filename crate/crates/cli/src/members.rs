//! Member descriptors: `two_point:alpha=0.5`, `pareto:a=2`,
//! `three_point:points=0/1/2,probs=0.25/0.5/0.25`.

use rbl_core::{make_pareto_member, make_two_point, MeanMadSpec, MemberDist};

use crate::config::{ConfigError, Origin};

fn invalid(origin: &Origin, message: String) -> ConfigError {
    ConfigError::Invalid { origin: origin.clone(), message }
}

fn triple(origin: &Origin, key: &str, text: &str) -> Result<[f64; 3], ConfigError> {
    let parts: Vec<f64> = text
        .split('/')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(origin, format!("`{key}` needs three numbers separated by `/`, got `{text}`")))?;
    parts.try_into().map_err(|_| invalid(origin, format!("`{key}` needs exactly three values, got `{text}`")))
}

/// Parses one descriptor against `spec`.
pub fn parse_member(text: &str, spec: MeanMadSpec, origin: &Origin) -> Result<MemberDist, ConfigError> {
    let (kind, params) = text.split_once(':').unwrap_or((text, ""));
    let mut fields = Vec::new();
    for part in params.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) =
            part.split_once('=').ok_or_else(|| invalid(origin, format!("expected `name=value` in `{text}`")))?;
        fields.push((k.trim(), v.trim()));
    }
    let field = |name: &str| fields.iter().find(|f| f.0 == name).map(|f| f.1);
    let number = |name: &str| -> Result<f64, ConfigError> {
        let v = field(name).ok_or_else(|| invalid(origin, format!("`{text}` is missing `{name}`")))?;
        v.parse().map_err(|_| invalid(origin, format!("`{name}` must be a number, got `{v}`")))
    };
    let member = match kind.trim().replace('-', "_").as_str() {
        "two_point" => MemberDist::TwoPoint(make_two_point(spec, number("alpha")?)?),
        "pareto" => make_pareto_member(spec, number("a")?)?,
        "three_point" => {
            let points = triple(origin, "points", field("points").unwrap_or(""))?;
            let probs = triple(origin, "probs", field("probs").unwrap_or(""))?;
            MemberDist::three_point(spec, points, probs)?
        }
        other => {
            return Err(invalid(origin, format!("unknown member kind `{other}` (two_point, three_point, pareto)")));
        }
    };
    Ok(member)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> MeanMadSpec {
        MeanMadSpec::new(1.0, 0.5).unwrap()
    }

    const FLAG: Origin = Origin::Flag("member");

    #[test]
    fn descriptors() {
        assert_eq!(parse_member("two_point:alpha=0.5", spec(), &FLAG).unwrap().kind(), "two_point");
        assert_eq!(parse_member("pareto:a=2", spec(), &FLAG).unwrap().kind(), "pareto");
        let three = parse_member("three-point:points=0/1/2,probs=0.25/0.5/0.25", spec(), &FLAG).unwrap();
        assert_eq!(three.kind(), "three_point");
    }

    #[test]
    fn bad_descriptors() {
        for bad in ["pareto", "pareto:a=x", "normal:s=1", "three_point:points=0/1,probs=1/0/0", "two_point:alpha"] {
            let err = parse_member(bad, spec(), &FLAG).unwrap_err();
            assert!(err.to_string().starts_with("--member:"), "{bad}: {err}");
        }
        assert!(matches!(parse_member("two_point:alpha=0.1", spec(), &FLAG), Err(ConfigError::Core(_))));
    }
}
