#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dicca {

// All library failures derive from Error so callers (the CLI in particular)
// can map families of failures onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidMatrix : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class SingularCovariance : public Error {
public:
    SingularCovariance(const std::string& what, double smallest_eigenvalue)
        : Error(what), smallest_eigenvalue_(smallest_eigenvalue) {}
    double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

private:
    double smallest_eigenvalue_;
};

class InvalidView : public Error {
public:
    using Error::Error;
};

class InvalidIndex : public Error {
public:
    using Error::Error;
};

class InvalidTape : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class InvalidStructure : public Error {
public:
    using Error::Error;
};

class InvalidSplit : public Error {
public:
    using Error::Error;
};

class DegenerateView : public Error {
public:
    using Error::Error;
};

class NonFiniteGradient : public Error {
public:
    NonFiniteGradient(const std::string& path)
        : Error("non-finite gradient in " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::size_t epoch, std::size_t batch)
        : Error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch)),
          epoch_(epoch),
          batch_(batch) {}
    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

}  // namespace dicca
