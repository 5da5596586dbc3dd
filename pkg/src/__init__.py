"""LightSpeech NAS - architecture search and cost profiling for lightweight TTS models."""

__version__ = "0.1.0"
