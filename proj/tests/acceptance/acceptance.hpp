#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

namespace dcabc::acceptance {

struct Context {
  std::filesystem::path source_dir;  // bundled configs live in source_dir / "configs"
  std::filesystem::path work_dir;    // run artifacts
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Collects the measured values of one criterion; every check must hold.
class Verdict {
 public:
  template <class T>
  Verdict& note(const std::string& key, const T& value) {
    if (!first_) text_ << ", ";
    first_ = false;
    text_ << key << '=' << value;
    return *this;
  }
  Verdict& check(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failed_.empty()) failed_ += "; ";
      failed_ += what;
    }
    return *this;
  }
  Outcome outcome() const {
    std::string d = text_.str();
    if (!pass_) d += " [failed: " + failed_ + "]";
    return {pass_, d};
  }

 private:
  std::ostringstream text_;
  std::string failed_;
  bool pass_ = true;
  bool first_ = true;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Progress lines go to stderr so stdout keeps one line per criterion.
void progress(const std::string& line);

Outcome criterion_1(const Context& ctx);
Outcome criterion_2(const Context& ctx);
Outcome criterion_3(const Context& ctx);
Outcome criterion_4(const Context& ctx);
Outcome criterion_5(const Context& ctx);
Outcome criterion_6(const Context& ctx);
Outcome criterion_7(const Context& ctx);
Outcome criterion_8(const Context& ctx);
Outcome criterion_9(const Context& ctx);
Outcome criterion_10(const Context& ctx);

}  // namespace dcabc::acceptance
