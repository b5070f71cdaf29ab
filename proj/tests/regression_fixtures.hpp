#pragma once
// Values produced by this library on seeded fixtures and frozen to catch
// regressions; they have no external reference.

constexpr double kLogisticD5MeanNorm = 2.2155365071493764;
