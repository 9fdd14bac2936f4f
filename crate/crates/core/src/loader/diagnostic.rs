use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

impl Location {
    pub const fn new(line: u32, column: u32) -> Self {
        Location { line, column }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
    Advice,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Advice => "advice",
        }
    }
}

macro_rules! codes {
    ($($variant:ident => $s:literal, $sev:ident;)+) => {
        /// Stable diagnostic codes.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum DiagCode {
            $($variant),+
        }

        impl DiagCode {
            pub const ALL: &'static [DiagCode] = &[$(DiagCode::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(DiagCode::$variant => $s),+
                }
            }

            pub fn severity(self) -> Severity {
                match self {
                    $(DiagCode::$variant => Severity::$sev),+
                }
            }
        }
    };
}

codes! {
    Parse => "E_PARSE", Error;
    BadRoot => "E_BAD_ROOT", Error;
    BadBool => "E_BAD_BOOL", Error;
    BadInt => "E_BAD_INT", Error;
    BadEnum => "E_BAD_ENUM", Error;
    LanguageName => "E_LANGUAGE_NAME", Error;
    DupLanguage => "E_DUP_LANGUAGE", Error;
    MissingAttr => "E_MISSING_ATTR", Error;
    BadIdent => "E_BAD_IDENT", Error;
    BadType => "E_BAD_TYPE", Error;
    BadConstraintType => "E_BAD_CONSTRAINT_TYPE", Error;
    BadRelationship => "E_BAD_RELATIONSHIP", Error;
    DupEntity => "E_DUP_ENTITY", Error;
    DupTable => "E_DUP_TABLE", Error;
    DupField => "E_DUP_FIELD", Error;
    NoFields => "E_NO_FIELDS", Error;
    PkCount => "E_PK_COUNT", Error;
    Identity => "E_IDENTITY", Error;
    Length => "E_LENGTH", Error;
    RowsCols => "E_ROWS_COLS", Error;
    FkTarget => "E_FK_TARGET", Error;
    ConstraintArity => "E_CONSTRAINT_ARITY", Error;
    CFieldUnknown => "E_CFIELD_UNKNOWN", Error;
    CompareFamily => "E_COMPARE_FAMILY", Error;
    DupConstraint => "E_DUP_CONSTRAINT", Error;
    DefaultLanguage => "E_DEFAULT_LANGUAGE", Error;
    UnknownElement => "W_UNKNOWN_ELEMENT", Warning;
    UnknownAttr => "W_UNKNOWN_ATTR", Warning;
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index path of a model element, used to find its source location after
/// validation has run on the location-free model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Anchor {
    Document,
    Settings,
    Entity(usize),
    Field(usize, usize),
    Constraint(usize, usize),
    CField(usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub severity: Severity,
    pub message: String,
    pub location: Option<Location>,
    /// Element path such as `Entity[Fakultet]/Field[strName]`.
    pub subject: String,
    pub(crate) anchor: Option<Anchor>,
    pub(crate) attribute: Option<&'static str>,
}

impl Diagnostic {
    pub fn new(code: DiagCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: code.severity(),
            message: message.into(),
            location: None,
            subject: subject.into(),
            anchor: None,
            attribute: None,
        }
    }

    pub(crate) fn at(mut self, location: Location) -> Self {
        self.location = Some(location);
        self
    }

    pub(crate) fn anchored(mut self, anchor: Anchor, attribute: Option<&'static str>) -> Self {
        self.anchor = Some(anchor);
        self.attribute = attribute;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.severity.as_str(), self.code)?;
        if let Some(loc) = self.location {
            write!(f, " {loc}")?;
        }
        if !self.subject.is_empty() {
            write!(f, " {}", self.subject)?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Orders diagnostics by location (unlocated last), then code and subject.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        let key = |d: &Diagnostic| (d.location.is_none(), d.location);
        key(a)
            .cmp(&key(b))
            .then_with(|| a.code.cmp(&b.code))
            .then_with(|| a.subject.cmp(&b.subject))
    });
}
