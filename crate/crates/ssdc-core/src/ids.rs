//! Identifier newtypes shared across modules.

use serde::{Deserialize, Serialize};
use std::fmt;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_type!(
    /// A salvaged device. Ordering is lexicographic on the token; inventories
    /// should zero-pad numeric suffixes if they care about numeric order.
    NodeId
);
id_type!(
    /// A service from the catalog.
    ServiceId
);
id_type!(
    /// One replica of a service. Stable across migrations.
    TaskId
);
id_type!(
    /// A network switch.
    SwitchId
);
