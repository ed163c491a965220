// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pvf {

// Error families map to CLI exit codes: config=2, backend=3, data=4.
enum class ErrorKind { Config = 2, Backend = 3, Data = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define PVF_DEFINE_ERROR(NAME, KIND)                                 \
  class NAME : public Error {                                        \
   public:                                                           \
    explicit NAME(const std::string& msg)                            \
        : Error(ErrorKind::KIND, std::string(#NAME ": ") + msg) {}   \
  };

// core metrics
PVF_DEFINE_ERROR(DimensionMismatch, Data)
PVF_DEFINE_ERROR(WeightMismatch, Data)
PVF_DEFINE_ERROR(IndexOutOfRange, Data)
PVF_DEFINE_ERROR(AllZeroMass, Data)
PVF_DEFINE_ERROR(UnknownWord, Data)
PVF_DEFINE_ERROR(InvalidDistribution, Data)

// schema / contexts / mining
PVF_DEFINE_ERROR(SchemaError, Data)
PVF_DEFINE_ERROR(SlotCollision, Data)
PVF_DEFINE_ERROR(BadTemplate, Data)

// reference models
PVF_DEFINE_ERROR(InvalidSpec, Config)
PVF_DEFINE_ERROR(UnsupportedSpec, Config)

// probe
PVF_DEFINE_ERROR(BackendUnavailable, Backend)
PVF_DEFINE_ERROR(MalformedResponse, Backend)
PVF_DEFINE_ERROR(AuthFailure, Backend)
PVF_DEFINE_ERROR(IncompleteTensor, Data)
PVF_DEFINE_ERROR(ProvenanceMismatch, Data)
PVF_DEFINE_ERROR(MalformedFile, Data)

// analysis
PVF_DEFINE_ERROR(DegenerateDesign, Data)
PVF_DEFINE_ERROR(LengthMismatch, Data)
PVF_DEFINE_ERROR(TooFewSamples, Data)
PVF_DEFINE_ERROR(MissingGroups, Data)

// cli
PVF_DEFINE_ERROR(ConfigError, Config)

#undef PVF_DEFINE_ERROR

}  // namespace pvf
