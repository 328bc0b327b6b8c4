#pragma once

#include <stdexcept>
#include <string>

namespace lung {

/// Broad failure class; the CLI maps it to an exit code.
enum class ErrorKind {
  Data,       // unreadable, malformed or inconsistent inputs
  Numerical,  // non-finite values during training
  Logic,      // caller broke a precondition
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define LUNG_DEFINE_ERROR(Name, Kind)                    \
  class Name : public Error {                            \
   public:                                               \
    explicit Name(const std::string& what)               \
        : Error(ErrorKind::Kind, #Name ": " + what) {}   \
  }

// audio_io
LUNG_DEFINE_ERROR(MalformedHeader, Data);
LUNG_DEFINE_ERROR(UnsupportedEncoding, Data);
LUNG_DEFINE_ERROR(EmptyAudio, Data);
LUNG_DEFINE_ERROR(IoError, Data);

// features
LUNG_DEFINE_ERROR(SignalTooShort, Data);
LUNG_DEFINE_ERROR(InvalidConfig, Logic);

// tensor_nn
LUNG_DEFINE_ERROR(ShapeMismatch, Logic);
LUNG_DEFINE_ERROR(StaleTrace, Logic);
LUNG_DEFINE_ERROR(CorruptCheckpoint, Data);

// ssl
LUNG_DEFINE_ERROR(DegenerateInput, Numerical);

// dataset
LUNG_DEFINE_ERROR(MalformedName, Data);
LUNG_DEFINE_ERROR(MalformedCsv, Data);
LUNG_DEFINE_ERROR(UnknownPatient, Data);
LUNG_DEFINE_ERROR(NoUsableData, Data);
LUNG_DEFINE_ERROR(ConfigHashMismatch, Data);
LUNG_DEFINE_ERROR(CorruptCache, Data);
LUNG_DEFINE_ERROR(CorruptManifest, Data);

// evaluation
LUNG_DEFINE_ERROR(LengthMismatch, Logic);
LUNG_DEFINE_ERROR(OutOfRangeLabel, Logic);
LUNG_DEFINE_ERROR(EmptyEvaluation, Data);
LUNG_DEFINE_ERROR(MalformedReport, Data);

#undef LUNG_DEFINE_ERROR

/// Thrown by mel_filterbank; carries the offending filter index.
class DegenerateFilter : public Error {
 public:
  explicit DegenerateFilter(std::size_t filter_index)
      : Error(ErrorKind::Logic,
              "DegenerateFilter: mel filter " + std::to_string(filter_index) +
                  " has coincident corners"),
        filter_index_(filter_index) {}
  std::size_t filter_index() const noexcept { return filter_index_; }

 private:
  std::size_t filter_index_;
};

/// Training produced a NaN/Inf loss or gradient.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(std::string phase, int epoch, int batch)
      : Error(ErrorKind::Numerical,
              "NonFiniteLoss: " + phase + " epoch " + std::to_string(epoch) +
                  " batch " + std::to_string(batch)),
        phase_(std::move(phase)), epoch_(epoch), batch_(batch) {}
  const std::string& phase() const noexcept { return phase_; }
  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  std::string phase_;
  int epoch_;
  int batch_;
};

}  // namespace lung
