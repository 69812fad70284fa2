//! Static help text behind the dashboard's help buttons.

use serde::Serialize;

use srl_dash_core::insights::PageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HelpTopic {
    pub topic: &'static str,
    pub title: &'static str,
    pub text: &'static str,
}

pub const TOPICS: &[HelpTopic] = &[
    HelpTopic {
        topic: "summary",
        title: "Weekly summary",
        text: "One chart per learning dimension showing the cohort average week by week. \
               The arrow next to each value compares the week with the previous one: up, down, \
               or flat when the change is within 1%. Use the date range selector to focus on a \
               part of the course.",
    },
    HelpTopic {
        topic: "profiles",
        title: "Student profiles",
        text: "Students are grouped into profiles that combine their group in each of the five \
               dimensions. Each profile lists its size, its behavior in every dimension and the \
               mean final grade of its members (mean \u{b1} standard deviation). The area chart \
               shows how the number of students active in each profile evolves over the weeks.",
    },
    HelpTopic {
        topic: "proactivity",
        title: "Proactivity",
        text: "Proactivity measures the delay between the first time a student opens a video and \
               the in-person session it prepares, in days. Negative values mean anticipation: the \
               video was watched before the session. Positive values mean the student was late. \
               Up-to-date students watch before class; delayed students catch up afterwards. \
               The composition chart splits each week's videos into watched on time, watched late \
               and not watched.",
    },
    HelpTopic {
        topic: "effort",
        title: "Effort",
        text: "Effort is the amount of work a student puts in each week: hours spent online on the \
               course and number of video interactions. Higher intensity groups spend more time \
               and click more than the cohort average.",
    },
    HelpTopic {
        topic: "consistency",
        title: "Consistency",
        text: "Consistency describes how evenly work is spread over the course: the mean length of \
               a study session and each student's weekly time relative to the cohort. Constant \
               students keep a steady pace; others increase or drop their activity over time.",
    },
    HelpTopic {
        topic: "control",
        title: "Control",
        text: "Control reflects how actively students manage video playback: pauses per hour of \
               video and changes of playback speed. Higher intensity of control is associated \
               with students who stop to take notes or adapt the pace to their needs.",
    },
    HelpTopic {
        topic: "regularity",
        title: "Regularity",
        text: "Regularity tells whether students study on the same days of the week and at the \
               same hours. Each score goes from 0 (activity spread evenly, no routine) to 1 (all \
               activity on one day or at one hour). The charts show activity per weekday and per \
               hour of the day.",
    },
    HelpTopic {
        topic: "groups",
        title: "Groups view",
        text: "The groups view splits the cohort into the behavior groups found for this dimension \
               and plots each group's average over the weeks. Hover over a line to see the exact \
               value; the legend gives the group name and its size.",
    },
];

pub fn get_help(topic: &str) -> Option<&'static HelpTopic> {
    TOPICS.iter().find(|t| t.topic == topic)
}

/// Pages with no registered topic.
pub fn missing_topics() -> Vec<PageId> {
    PageId::ALL
        .into_iter()
        .filter(|p| get_help(p.as_str()).is_none())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_page_has_a_topic() {
        assert!(missing_topics().is_empty());
    }

    #[test]
    fn proactivity_explains_delay_and_anticipation() {
        let t = get_help("proactivity").unwrap();
        assert!(t.text.contains("delay") && t.text.contains("anticipation"));
    }

    #[test]
    fn unknown_topic_is_none() {
        assert!(get_help("astrology").is_none());
    }

    #[test]
    fn topics_are_unique_and_non_empty() {
        for (i, t) in TOPICS.iter().enumerate() {
            assert!(!t.text.trim().is_empty() && !t.title.is_empty());
            assert!(TOPICS[..i].iter().all(|o| o.topic != t.topic));
        }
    }
}
