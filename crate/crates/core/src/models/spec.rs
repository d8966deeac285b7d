use std::fmt;

use crate::error::{Error, Result};
use crate::nn::{Network, NetworkKind};

/// Layer-structure description of an equalizer or decoder network.
///
/// For a CNN, `layer_sizes` lists filter counts per layer. For a DNN it
/// lists every width, input first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub kind: NetworkKind,
    pub layer_sizes: Vec<usize>,
    pub kernel: usize,
}

impl NetworkSpec {
    pub fn cnn(filters: &[usize], kernel: usize) -> Self {
        NetworkSpec {
            kind: NetworkKind::Cnn,
            layer_sizes: filters.to_vec(),
            kernel,
        }
    }

    pub fn dnn(widths: &[usize]) -> Self {
        NetworkSpec {
            kind: NetworkKind::Dnn,
            layer_sizes: widths.to_vec(),
            kernel: 0,
        }
    }

    pub fn default_cnn() -> Self {
        NetworkSpec::cnn(&[6, 12, 24, 12, 6, 1], 3)
    }

    pub fn default_nnd() -> Self {
        NetworkSpec::dnn(&[16, 128, 64, 32, 8])
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidSpec(format!("zero-sized layer in {self}")));
        }
        match self.kind {
            NetworkKind::Cnn => {
                if self.layer_sizes.last() != Some(&1) {
                    return Err(Error::InvalidSpec(format!("CNN {self} must end in a single filter")));
                }
                if self.kernel.is_multiple_of(2) {
                    return Err(Error::InvalidSpec(format!("CNN kernel {} must be odd", self.kernel)));
                }
            }
            NetworkKind::Dnn => {
                if self.layer_sizes.len() < 2 {
                    return Err(Error::InvalidSpec(format!("DNN {self} needs input and output widths")));
                }
            }
        }
        Ok(())
    }

    /// Parses `{6,12,24,12,6,1}` or `6,12,24,12,6,1`.
    pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
        let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
        inner
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad layer size `{}` in `{text}`", s.trim())))
            })
            .collect()
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.layer_sizes.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", sizes.join(","))
    }
}

/// Conv stack with ReLU on all but the last layer and length-preserving padding.
pub fn build_cnn_equalizer(spec: &NetworkSpec) -> Result<Network> {
    if spec.kind != NetworkKind::Cnn {
        return Err(Error::InvalidSpec(format!("expected a cnn spec, got {}", spec.kind)));
    }
    spec.validate()?;
    Network::conv_stack(&spec.layer_sizes, spec.kernel)
}

/// Dense decoder with ReLU hidden layers and a sigmoid output layer.
pub fn build_nnd(spec: &NetworkSpec) -> Result<Network> {
    if spec.kind != NetworkKind::Dnn {
        return Err(Error::InvalidSpec(format!("expected a dnn spec, got {}", spec.kind)));
    }
    spec.validate()?;
    Network::dense_stack(&spec.layer_sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_paper_networks() {
        let cnn = build_cnn_equalizer(&NetworkSpec::default_cnn()).unwrap();
        assert_eq!(cnn.layers().len(), 6);
        assert_eq!(cnn.param_count(), 2257);
        let nnd = build_nnd(&NetworkSpec::default_nnd()).unwrap();
        assert_eq!(nnd.param_count(), 12776);
        assert_eq!(cnn.param_count() + nnd.param_count(), 15033);
    }

    #[test]
    fn small_networks() {
        assert_eq!(
            build_cnn_equalizer(&NetworkSpec::cnn(&[1], 3)).unwrap().param_count(),
            4
        );
        assert_eq!(
            build_cnn_equalizer(&NetworkSpec::cnn(&[8, 16, 8, 1], 3))
                .unwrap()
                .param_count(),
            849
        );
        assert_eq!(build_nnd(&NetworkSpec::dnn(&[2, 2])).unwrap().param_count(), 6);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_cnn_equalizer(&NetworkSpec::cnn(&[4, 2], 3)).is_err());
        assert!(build_cnn_equalizer(&NetworkSpec::cnn(&[4, 1], 4)).is_err());
        assert!(build_cnn_equalizer(&NetworkSpec::default_nnd()).is_err());
        assert!(build_nnd(&NetworkSpec::dnn(&[16])).is_err());
    }

    #[test]
    fn parses_and_prints() {
        assert_eq!(
            NetworkSpec::parse_sizes("{6,12, 24,12,6,1}").unwrap(),
            vec![6, 12, 24, 12, 6, 1]
        );
        assert_eq!(NetworkSpec::parse_sizes("32,64,32,1").unwrap(), vec![32, 64, 32, 1]);
        assert!(NetworkSpec::parse_sizes("{6,x}").is_err());
        assert_eq!(NetworkSpec::default_cnn().to_string(), "{6,12,24,12,6,1}");
    }
}
