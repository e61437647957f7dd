//! Validation diagnostics shared by the model checks, relation checks and the
//! instance validator.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Closed set of diagnostic codes. The serialized names are stable and are
/// what golden tests and report consumers match on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagCode {
    // object table
    DuplicateReference,
    AbstractInstantiation,
    UnusedReference,
    ReferenceOutsidePool,
    DomainViolation,
    MissingAttribute,
    UnknownAttribute,
    UnknownClass,
    DanglingReference,
    // discriminators
    ConcreteDiscriminatorRoot,
    ConcreteDiscriminatorChild,
    MissingDiscriminator,
    // relation kinds
    TypeMismatch,
    MultipleImages,
    MissingImage,
    NotInjective,
    NotSurjective,
    SharedComponent,
    MultipleComponents,
    OrphanComponent,
    MultiplicityViolation,
    // ordered relations
    DuplicateInSequence,
    SequenceOnFlatRelation,
    // subset / reified
    SubsetViolation,
    MissingAssociationData,
    UnexpectedAssociationData,
    // axioms
    InvariantViolation,
    ConstraintViolation,
    EvaluationError,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::DuplicateReference => "DuplicateReference",
            DiagCode::AbstractInstantiation => "AbstractInstantiation",
            DiagCode::UnusedReference => "UnusedReference",
            DiagCode::ReferenceOutsidePool => "ReferenceOutsidePool",
            DiagCode::DomainViolation => "DomainViolation",
            DiagCode::MissingAttribute => "MissingAttribute",
            DiagCode::UnknownAttribute => "UnknownAttribute",
            DiagCode::UnknownClass => "UnknownClass",
            DiagCode::DanglingReference => "DanglingReference",
            DiagCode::ConcreteDiscriminatorRoot => "ConcreteDiscriminatorRoot",
            DiagCode::ConcreteDiscriminatorChild => "ConcreteDiscriminatorChild",
            DiagCode::MissingDiscriminator => "MissingDiscriminator",
            DiagCode::TypeMismatch => "TypeMismatch",
            DiagCode::MultipleImages => "MultipleImages",
            DiagCode::MissingImage => "MissingImage",
            DiagCode::NotInjective => "NotInjective",
            DiagCode::NotSurjective => "NotSurjective",
            DiagCode::SharedComponent => "SharedComponent",
            DiagCode::MultipleComponents => "MultipleComponents",
            DiagCode::OrphanComponent => "OrphanComponent",
            DiagCode::MultiplicityViolation => "MultiplicityViolation",
            DiagCode::DuplicateInSequence => "DuplicateInSequence",
            DiagCode::SequenceOnFlatRelation => "SequenceOnFlatRelation",
            DiagCode::SubsetViolation => "SubsetViolation",
            DiagCode::MissingAssociationData => "MissingAssociationData",
            DiagCode::UnexpectedAssociationData => "UnexpectedAssociationData",
            DiagCode::InvariantViolation => "InvariantViolation",
            DiagCode::ConstraintViolation => "ConstraintViolation",
            DiagCode::EvaluationError => "EvaluationError",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The model axiom a diagnostic was raised against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomRef {
    pub name: String,
    pub line: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    /// Relation, class or object path the diagnostic is about.
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axiom: Option<AxiomRef>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: DiagCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            subject: subject.into(),
            axiom: None,
            message: message.into(),
        }
    }

    pub fn with_axiom(mut self, name: impl Into<String>, line: u32) -> Self {
        self.axiom = Some(AxiomRef {
            name: name.into(),
            line,
        });
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.code, self.subject, self.message)?;
        if let Some(ax) = &self.axiom {
            write!(f, " (axiom {} at line {})", ax.name, ax.line)?;
        }
        Ok(())
    }
}
