use serde::{Deserialize, Serialize};

/// Every randomness knob the generators read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GeneratorConfig {
    /// Probability a string is drawn from the full charset rather than `[a-zA-Z0-9]`.
    pub string_mix: f64,
    /// Highest code point the full-charset string generator emits.
    pub charset_max: u32,
    /// Probability an integer is a natural number (0 included) rather than any signed value.
    pub int_mode: f64,
    /// Per required parameter, probability it is left out of a request.
    pub omit_required_prob: f64,
    /// Per parameter, probability its value is pushed out of range or retyped.
    pub out_of_range_prob: f64,
    /// Upper bound on the generation size.
    pub max_size: u32,
    /// Attempts allowed when a `pattern` string must be found by rejection.
    pub pattern_retries: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            string_mix: 0.5,
            charset_max: 255,
            int_mode: 0.5,
            omit_required_prob: 0.0,
            out_of_range_prob: 0.0,
            max_size: 100,
            pattern_retries: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("charsetMax {0} is beyond the last Unicode code point")]
    Charset(u32),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("stringMix", self.string_mix),
            ("intMode", self.int_mode),
            ("omitRequiredProb", self.omit_required_prob),
            ("outOfRangeProb", self.out_of_range_prob),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        if self.charset_max > char::MAX as u32 {
            return Err(ConfigError::Charset(self.charset_max));
        }
        Ok(())
    }

    /// Same knobs with both mutation probabilities set to zero.
    pub fn without_mutations(&self) -> Self {
        GeneratorConfig {
            omit_required_prob: 0.0,
            out_of_range_prob: 0.0,
            ..self.clone()
        }
    }
}
