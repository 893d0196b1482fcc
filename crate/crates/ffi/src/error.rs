use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};

use discoqad::Error;

/// Result code of every fallible call. On anything but `Ok` the message is
/// available from `dq_last_error` on the same thread.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Validation = 4,
    UnknownUtility = 5,
    UtilityFailed = 6,
    Io = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

pub(crate) struct Failure(pub DqStatus, pub String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => DqStatus::InvalidArgument,
            Error::Validation(_) => DqStatus::Validation,
            Error::UnknownUtility { .. } => DqStatus::UnknownUtility,
            Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => DqStatus::Io,
            Error::Utility { .. }
            | Error::ScorerStatus { .. }
            | Error::ScorerTransport(_)
            | Error::ScorerProtocol(_) => DqStatus::UtilityFailed,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', "\\0")).unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

/// Runs `f`, translating errors and panics into a status code.
pub(crate) fn guard<F: FnOnce() -> Result<(), Failure> + UnwindSafe>(f: F) -> DqStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => {
            set_last_error(None);
            DqStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(Some(message));
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_last_error(Some(format!("internal panic: {message}")));
            DqStatus::Panic
        }
    }
}

/// Message for the most recent failed call on this thread, or NULL if the
/// last call succeeded. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dq_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}
