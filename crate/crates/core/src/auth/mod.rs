//! Declarative authentication: the WFC `auth.yaml` model and the login flow
//! that turns it into credentials.

mod flow;
mod model;
mod validate;

pub use flow::{
    acquire_credentials, decorate_request, extract_token, AuthFlowError, CredentialKind,
    CredentialMaterial,
};
pub use model::{
    merge_template, parse_auth_file, resolve_template, AuthFile, AuthMechanism, AuthParseError,
    AuthenticationInfo, CredentialSource, Header, LoginEndpointAuth, LoginRecipe, ResolutionError,
    ResolvedAuth, TokenConfig, TokenHandling,
};
pub use validate::{validate_auth_file, Violation, ViolationCode};

pub use crate::doc::DocFormat as AuthFormat;
