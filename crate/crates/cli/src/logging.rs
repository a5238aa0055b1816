//! Minimal stderr logger with an optional JSON-lines format.

use std::io::Write;

use log::{Level, LevelFilter, Log, Metadata, Record};

struct StderrLogger {
    json: bool,
    level: LevelFilter,
}

impl Log for StderrLogger {
    fn enabled(&self, metadata: &Metadata<'_>) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &Record<'_>) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = if self.json {
            serde_json::json!({
                "level": record.level().as_str(),
                "target": record.target(),
                "message": record.args().to_string(),
            })
            .to_string()
        } else {
            format!("[{}] {}", record.level(), record.args())
        };
        let _ = writeln!(std::io::stderr().lock(), "{line}");
    }

    fn flush(&self) {}
}

/// Installs the logger; later calls are ignored.
pub fn init(json: bool, level: Level) {
    let filter = level.to_level_filter();
    let logger = Box::new(StderrLogger { json, level: filter });
    if log::set_boxed_logger(logger).is_ok() {
        log::set_max_level(filter);
    }
}
