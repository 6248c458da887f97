//! Stub host functions, selected by name in agent config files so
//! scenarios need no native code.
//!
//! Specs: `pick-first` (split content on `|`, return the first piece),
//! `echo`, `const:<v>`, `concat:<suffix>`, `int-add:<n>`.

use std::sync::Arc;

use protonet::executor::HostFunction;

/// Resolves a stub spec to a host function.
pub fn resolve(spec: &str) -> Result<HostFunction, String> {
    if spec == "pick-first" {
        return Ok(Arc::new(|arg: &str| {
            Ok(arg.split('|').next().unwrap_or("").to_string())
        }));
    }
    if spec == "echo" {
        return Ok(Arc::new(|arg: &str| Ok(arg.to_string())));
    }
    if let Some(value) = spec.strip_prefix("const:") {
        let value = value.to_string();
        return Ok(Arc::new(move |_: &str| Ok(value.clone())));
    }
    if let Some(suffix) = spec.strip_prefix("concat:") {
        let suffix = suffix.to_string();
        return Ok(Arc::new(move |arg: &str| Ok(format!("{arg}{suffix}"))));
    }
    if let Some(n) = spec.strip_prefix("int-add:") {
        let n: i64 = n
            .parse()
            .map_err(|e| format!("int-add stub needs an integer: {e}"))?;
        return Ok(Arc::new(move |arg: &str| {
            let value: i64 = arg
                .parse()
                .map_err(|e| format!("int-add argument `{arg}`: {e}"))?;
            Ok((value + n).to_string())
        }));
    }
    Err(format!("unknown stub spec `{spec}`"))
}
