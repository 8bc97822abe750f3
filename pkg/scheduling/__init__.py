"""Self-triggered transmission schedules"""
