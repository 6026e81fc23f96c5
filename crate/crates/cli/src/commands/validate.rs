use crate::args::ValidateArgs;
use crate::channel_file::to_canonical;
use crate::error::{exit, CliError, Result};

pub fn validate(args: &ValidateArgs) -> Result<i32> {
    let file = super::read(&args.channel)?;
    let v = file.validate();
    // keep stdout clean for `--dump-canonical -`
    let to_stdout = args
        .dump_canonical
        .as_ref()
        .is_none_or(|p| p.as_os_str() != "-");
    let mut report = format!(
        "channel: {}\nmodel: {}\n",
        args.channel.channel.display(),
        file.model
    );
    for c in &v.checks {
        report.push_str(&format!("{c}\n"));
    }
    if to_stdout {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    let (true, Some(channel)) = (v.passed(), &v.channel) else {
        return Ok(exit::VALIDATION);
    };
    if let Some(path) = &args.dump_canonical {
        let text = to_canonical(&file, channel);
        if path.as_os_str() == "-" {
            print!("{text}");
        } else {
            std::fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
    }
    Ok(exit::OK)
}
