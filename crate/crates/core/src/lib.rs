/// An option value that names no known variant.
#[derive(Debug, thiserror::Error)]
#[error("unknown {what} `{value}`")]
pub struct ParseOptionError {
    what: &'static str,
    value: String,
}

/// `FromStr` and `Display` for a fieldless enum from a name table.
macro_rules! named_enum {
    ($ty:ident, $what:literal, $($variant:ident => $name:literal),+) => {
        impl std::str::FromStr for $ty {
            type Err = $crate::ParseOptionError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err($crate::ParseOptionError::new($what, s)),
                }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $($ty::$variant => $name,)+ })
            }
        }
    };
}

impl ParseOptionError {
    fn new(what: &'static str, value: &str) -> Self {
        ParseOptionError { what, value: value.to_string() }
    }
}

pub mod concrete;
pub mod driver;
pub mod eqdom;
pub mod fixpoint;
pub mod ir;
pub mod mrud;
pub mod numdom;
pub mod var;

pub use var::Var;
