use std::str::FromStr;

/// Tableau 10.
pub const DEFAULT_PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub palette: Vec<String>,
    pub font_family: String,
    pub font_size: f64,
    /// Decimal places for coordinates.
    pub precision: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 640.0,
            height: 480.0,
            margin: 10.0,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            font_family: "sans-serif".to_string(),
            font_size: 11.0,
            precision: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue { line: usize, key: String, reason: String },
    #[error("{0}")]
    Invariant(String),
}

fn is_hex_color(s: &str) -> bool {
    let Some(hex) = s.strip_prefix('#') else { return false };
    matches!(hex.len(), 3 | 6) && hex.chars().all(|c| c.is_ascii_hexdigit())
}

impl RenderConfig {
    /// Defaults overridden by a flat `key = value` file. Lines starting with
    /// `#` are comments.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RenderConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            // Whole-line comments only: palette values contain `#`.
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let invalid = |reason: &str| ConfigError::InvalidValue {
                line,
                key: key.to_string(),
                reason: reason.to_string(),
            };
            let number = |min: f64| {
                f64::from_str(value)
                    .ok()
                    .filter(|v| v.is_finite() && *v >= min)
                    .ok_or_else(|| invalid(&format!("expected a number >= {min}")))
            };
            match key {
                "width" => cfg.width = number(1.0)?,
                "height" => cfg.height = number(1.0)?,
                "margin" => cfg.margin = number(0.0)?,
                "font_size" => cfg.font_size = number(1.0)?,
                "font_family" => {
                    if value.is_empty() || value.contains(['"', '<', '>', '&']) {
                        return Err(invalid("expected a plain font family name"));
                    }
                    cfg.font_family = value.to_string();
                }
                "precision" => {
                    cfg.precision = value
                        .parse::<usize>()
                        .ok()
                        .filter(|p| *p <= 6)
                        .ok_or_else(|| invalid("expected an integer from 0 to 6"))?
                }
                "palette" => {
                    let colors: Vec<String> = value.split(',').map(|c| c.trim().to_string()).collect();
                    if let Some(bad) = colors.iter().find(|c| !is_hex_color(c)) {
                        return Err(invalid(&format!("`{bad}` is not a hex color")));
                    }
                    if colors.len() < 10 {
                        return Err(invalid("at least 10 colors are required"));
                    }
                    cfg.palette = colors;
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.width <= 2.0 * self.margin || self.height <= 2.0 * self.margin {
            return Err(ConfigError::Invariant(format!(
                "width and height must exceed twice the margin ({})",
                self.margin
            )));
        }
        if self.palette.len() < 10 {
            return Err(ConfigError::Invariant("palette needs at least 10 colors".into()));
        }
        Ok(())
    }

    pub fn color(&self, index: Option<usize>) -> &str {
        &self.palette[index.unwrap_or(0) % self.palette.len()]
    }
}
