use std::path::Path;

use serde_json::{Map, Value};

use super::{read_to_string, IngestError};
use crate::geo::{Circle, Geometry, PlanarPoint, Polygon, Projection};
use crate::queries::{FenceError, FenceKind, Geofence, GeofenceRegistry};

pub fn load_geofences(path: &Path, projection: Projection) -> Result<GeofenceRegistry, IngestError> {
    let text = read_to_string(path)?;
    parse_geofences(&text, projection).map_err(|e| match e {
        IngestError::Parse { context, message } => IngestError::Parse {
            context: format!("{} ({context})", path.display()),
            message,
        },
        other => other,
    })
}

/// Parses a GeoJSON FeatureCollection of Polygon features and Point
/// features with a `radius_m` property (circles), projecting on load.
pub fn parse_geofences(text: &str, projection: Projection) -> Result<GeofenceRegistry, IngestError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        IngestError::parse(format!("line {}, column {}", e.line(), e.column()), e)
    })?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::parse("document", "expected a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::parse("document", "`features` must be an array"))?;
    let mut fences = Vec::with_capacity(features.len());
    for (i, feature) in features.iter().enumerate() {
        fences.push(parse_feature(i, feature, &projection)?);
    }
    GeofenceRegistry::new(projection, fences).map_err(|e| match e {
        FenceError::DuplicateId(id) => IngestError::DuplicateId(id),
        other => IngestError::InvalidFence {
            feature: 0,
            source: other,
        },
    })
}

fn parse_feature(i: usize, feature: &Value, proj: &Projection) -> Result<Geofence, IngestError> {
    let ctx = |what: &str| format!("feature {i} {what}");
    let props = feature
        .get("properties")
        .and_then(Value::as_object)
        .ok_or_else(|| IngestError::parse(ctx("properties"), "missing properties object"))?;
    let text = |key: &str| -> Result<Option<String>, IngestError> {
        match props.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) if key == "id" => Ok(Some(n.to_string())),
            Some(_) => Err(IngestError::parse(ctx(key), "expected a string")),
        }
    };
    let number = |key: &str| -> Result<Option<f64>, IngestError> {
        match props.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| IngestError::parse(ctx(key), "expected a number")),
        }
    };

    let id = text("id")?.ok_or_else(|| IngestError::parse(ctx("properties"), "missing `id`"))?;
    let name = text("name")?.unwrap_or_else(|| id.clone());
    let kind_raw =
        text("kind")?.ok_or_else(|| IngestError::parse(ctx("properties"), "missing `kind`"))?;
    let kind: FenceKind = kind_raw.parse().map_err(|_| IngestError::UnknownKind {
        feature: i,
        kind: kind_raw.clone(),
    })?;
    let radius = number("radius_m")?;
    let geometry = parse_geometry(feature, radius, proj).map_err(|message| IngestError::Parse {
        context: ctx(&format!("`{id}` geometry")),
        message,
    })?;

    Geofence::new(
        id,
        name,
        kind,
        geometry,
        number("speed_limit")?,
        number("noise_limit")?,
    )
    .map_err(|e| match e {
        FenceError::MissingKindAttribute { id, kind, attribute } => {
            IngestError::MissingKindAttribute { id, kind, attribute }
        }
        other => IngestError::InvalidFence {
            feature: i,
            source: other,
        },
    })
}

fn position(v: &Value, proj: &Projection) -> Result<PlanarPoint, String> {
    let pair = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or("a position must be [lon, lat]")?;
    let lon = pair[0].as_f64().ok_or("longitude is not a number")?;
    let lat = pair[1].as_f64().ok_or("latitude is not a number")?;
    proj.project(lon, lat).map_err(|e| e.to_string())
}

fn ring(v: &Value, proj: &Projection) -> Result<Vec<PlanarPoint>, String> {
    v.as_array()
        .ok_or("a ring must be an array of positions")?
        .iter()
        .map(|p| position(p, proj))
        .collect()
}

fn parse_geometry(
    feature: &Value,
    radius: Option<f64>,
    proj: &Projection,
) -> Result<Geometry, String> {
    let geom: &Map<String, Value> = feature
        .get("geometry")
        .and_then(Value::as_object)
        .ok_or("missing geometry object")?;
    let coords = geom.get("coordinates").ok_or("missing coordinates")?;
    match geom.get("type").and_then(Value::as_str) {
        Some("Polygon") => {
            if radius.is_some() {
                return Err("`radius_m` only applies to Point features".into());
            }
            let rings = coords.as_array().ok_or("polygon coordinates must be an array")?;
            let (exterior, holes) = rings.split_first().ok_or("polygon has no rings")?;
            let exterior = ring(exterior, proj)?;
            let holes = holes
                .iter()
                .map(|h| ring(h, proj))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Polygon::new(exterior, holes).map_err(|e| e.to_string())?.into())
        }
        Some("Point") => {
            let r = radius.ok_or("a Point fence needs a `radius_m` property")?;
            let center = position(coords, proj)?;
            Ok(Circle::new(center, r).map_err(|e| e.to_string())?.into())
        }
        Some(other) => Err(format!("unsupported geometry type `{other}`")),
        None => Err("geometry has no type".into()),
    }
}
