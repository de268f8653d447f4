#pragma once

#include "dualgeo/coords.hpp"
#include "dualgeo/core.hpp"
#include "dualgeo/eval.hpp"
#include "dualgeo/io.hpp"
#include "dualgeo/kg.hpp"
#include "dualgeo/model.hpp"
#include "dualgeo/poincare.hpp"
#include "dualgeo/sphere.hpp"
#include "dualgeo/train.hpp"
