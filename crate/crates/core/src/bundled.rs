//! Example models and instance files shipped with the crate.

/// `(file name, source)` of every bundled model.
pub const MODELS: &[(&str, &str)] = &[
    ("abc.oocp", ABC),
    ("vehicle.oocp", VEHICLE),
    ("pc.oocp", PC),
    ("polygon.oocp", POLYGON),
    ("enrolment.oocp", ENROLMENT),
    ("anbn.oocp", ANBN),
];

pub const ABC: &str = include_str!("../models/abc.oocp");
pub const VEHICLE: &str = include_str!("../models/vehicle.oocp");
pub const PC: &str = include_str!("../models/pc.oocp");
pub const POLYGON: &str = include_str!("../models/polygon.oocp");
pub const ENROLMENT: &str = include_str!("../models/enrolment.oocp");
pub const ANBN: &str = include_str!("../models/anbn.oocp");

/// Instance files for the bundled models.
pub mod inputs {
    pub const AAABBB: &str = include_str!("../models/inputs/aaabbb.json");
    pub const ABBB: &str = include_str!("../models/inputs/abbb.json");
    pub const BAD_ABBB: &str = include_str!("../models/inputs/bad-abbb.json");
    pub const DOT_A_DOT_B: &str = include_str!("../models/inputs/dot-a-dot-b.json");
    pub const N2: &str = include_str!("../models/inputs/n2.json");
    pub const PC_400: &str = include_str!("../models/inputs/pc-400.json");
    pub const PC_300: &str = include_str!("../models/inputs/pc-300.json");
}

/// Look up a bundled model by file name.
pub fn model(name: &str) -> Option<&'static str> {
    MODELS.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}
