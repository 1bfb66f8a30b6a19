#pragma once

#include <iosfwd>
#include <string>

#include "clonesim/fit.hpp"

namespace clonesim {

/// Comma-delimited dataset format, one record per line:
///
///   experiment,arm,kind,time_h,division,value,weight
///   1,8.5,log_count,168,0,2.6749,1
///   2,ii,profile,84,5,31.8,1
///
/// The header row is required; columns may appear in any order and
/// `division` (default 0) and `weight` (default 1) may be omitted. Blank
/// lines and lines starting with '#' are skipped. Malformed input throws
/// InvalidArgument naming the offending line.
fit::DataSet read_dataset(std::istream& in);
fit::DataSet read_dataset_file(const std::string& path);

void write_dataset(std::ostream& out, const fit::DataSet& data);
void write_dataset_file(const std::string& path, const fit::DataSet& data);

/// 17 significant digits in scientific notation.
std::string format_number(double v);

}  // namespace clonesim
