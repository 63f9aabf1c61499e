use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Field dimensions. The field is centred on the origin with goals on the
/// x-axis at `x = ±length / 2`; the team attacks the positive-x goal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub length: f64,
    pub width: f64,
    pub goal_width: f64,
    pub goal_depth: f64,
}

impl FieldSpec {
    pub fn half_length(&self) -> f64 {
        0.5 * self.length
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    pub fn attacked_goal_center(&self) -> Vec2 {
        Vec2::new(self.half_length(), 0.0)
    }

    pub fn own_goal_center(&self) -> Vec2 {
        Vec2::new(-self.half_length(), 0.0)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_length() && p.y.abs() <= self.half_width()
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(-self.half_length(), self.half_length()),
            p.y.clamp(-self.half_width(), self.half_width()),
        )
    }
}

/// True when the ball has crossed the goal line of the attacked goal
/// (positive x when `attacking_positive_x`) between the posts.
pub fn in_goal(field: &FieldSpec, ball: Vec2, attacking_positive_x: bool) -> bool {
    let past_line = if attacking_positive_x {
        ball.x > field.half_length()
    } else {
        ball.x < -field.half_length()
    };
    past_line && ball.y.abs() < 0.5 * field.goal_width
}

/// True when the ball has left the field rectangle anywhere other than
/// through a goal mouth.
pub fn out_of_bounds(field: &FieldSpec, ball: Vec2) -> bool {
    !field.contains(ball) && !in_goal(field, ball, true) && !in_goal(field, ball, false)
}
