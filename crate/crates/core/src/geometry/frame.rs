use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

/// Coordinate frame label.
///
/// Equality is by label, so `Custom("Camera")` and `Camera` are the same frame.
#[derive(Clone, Debug)]
pub enum FrameId {
    World,
    Tcp,
    Camera,
    Lidar,
    Pattern,
    Custom(String),
}

impl FrameId {
    pub fn label(&self) -> &str {
        match self {
            FrameId::World => "World",
            FrameId::Tcp => "Tcp",
            FrameId::Camera => "Camera",
            FrameId::Lidar => "Lidar",
            FrameId::Pattern => "Pattern",
            FrameId::Custom(name) => name,
        }
    }

    pub fn custom(name: impl Into<String>) -> Self {
        Self::from_label(&name.into())
    }

    /// Maps well-known labels onto their named variant.
    pub fn from_label(label: &str) -> Self {
        match label {
            "World" => FrameId::World,
            "Tcp" => FrameId::Tcp,
            "Camera" => FrameId::Camera,
            "Lidar" => FrameId::Lidar,
            "Pattern" => FrameId::Pattern,
            other => FrameId::Custom(other.to_owned()),
        }
    }
}

impl PartialEq for FrameId {
    fn eq(&self, other: &Self) -> bool {
        self.label() == other.label()
    }
}

impl Eq for FrameId {}

impl Hash for FrameId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.label().hash(state);
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FrameId {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(FrameId::from_label(s))
    }
}
