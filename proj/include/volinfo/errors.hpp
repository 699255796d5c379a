#pragma once

#include <stdexcept>
#include <string>

namespace volinfo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or malformed input (CLI exit code 3).
class InputError : public Error {
public:
    using Error::Error;
};

// Numerical result outside its declared tolerance (CLI exit code 2).
class ToleranceError : public Error {
public:
    using Error::Error;
};

class DomainError : public InputError {
public:
    using InputError::InputError;
};

class DegreeUnsupported : public InputError {
public:
    using InputError::InputError;
};

class AbscissaInvalid : public InputError {
public:
    using InputError::InputError;
};

class TooFewSamples : public InputError {
public:
    using InputError::InputError;
};

class ParseError : public InputError {
public:
    using InputError::InputError;
};

class EmptySeries : public InputError {
public:
    using InputError::InputError;
};

class BranchDegenerate : public ToleranceError {
public:
    using ToleranceError::ToleranceError;
};

class MassDefect : public ToleranceError {
public:
    using ToleranceError::ToleranceError;
};

class Unstable : public ToleranceError {
public:
    using ToleranceError::ToleranceError;
};

class DegenerateRatio : public ToleranceError {
public:
    using ToleranceError::ToleranceError;
};

class NotPSD : public ToleranceError {
public:
    using ToleranceError::ToleranceError;
};

class NoConvergence : public ToleranceError {
public:
    using ToleranceError::ToleranceError;
};

class AllRestartsFailed : public ToleranceError {
public:
    using ToleranceError::ToleranceError;
};

}  // namespace volinfo
